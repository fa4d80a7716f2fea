//! Batch simulator for droplets on rigid and soft substrates: configuration,
//! time stepping, diagnostics and persistence.

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod output;
pub mod run;
pub mod scenario;

pub use config::{Config, ConfigError};
pub use error::{SimError, SimResult};
pub use output::{Checkpoint, ProbeField, RecordRow, Snapshot};
pub use run::{Outcome, Simulation};
pub use scenario::Scenario;

//! Physics of a droplet on a soft substrate: two-phase diffuse-interface
//! flow, a Saint Venant–Kirchhoff solid and their ALE coupling.

pub mod coupling;
pub mod error;
pub mod fluid;
pub mod mixture;
pub mod solid;
pub mod units;

pub use error::{PhysicsError, Result};
pub use mixture::{FluidParams, SolidParams};

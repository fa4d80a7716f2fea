use elastocap_core::PhysicsError;
use thiserror::Error;

use crate::config::ConfigError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("setup failed: {0}")]
    Setup(String),
    #[error("step {step} failed: {source}")]
    Solver { step: usize, source: PhysicsError },
    #[error("{0}")]
    Format(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl SimError {
    pub fn setup(e: impl std::fmt::Display) -> Self {
        SimError::Setup(e.to_string())
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        SimError::Io { path: path.display().to_string(), source }
    }

    /// Process exit status for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Config(_) | SimError::Setup(_) => 2,
            SimError::Solver { .. } => 3,
            SimError::Format(_) | SimError::Io { .. } => 1,
        }
    }
}

impl From<PhysicsError> for SimError {
    fn from(e: PhysicsError) -> Self {
        SimError::Setup(e.to_string())
    }
}

pub type SimResult<T> = std::result::Result<T, SimError>;

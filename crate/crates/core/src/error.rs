use elastocap_fem::FemError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhysicsError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no equilibrium contact angle: |σ₂−σ₁| = {diff} exceeds σ = {sigma} (total wetting)")]
    TotalWetting { diff: f64, sigma: f64 },
    #[error("Poisson ratio {0} is at or beyond the incompressible limit 0.5")]
    IncompressibleLimit(f64),
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("inverted element in cell {cell}: det F = {det:e}")]
    InvertedElement { cell: usize, det: f64 },
    #[error("mesh tangling in cell {cell}: det J = {det:e}")]
    MeshTangling { cell: usize, det: f64 },
    #[error("Newton solve did not converge after {iterations} iterations (last scaled update {last:e})")]
    NewtonFailure { iterations: usize, last: f64 },
    #[error("coupling did not converge after {iterations} subiterations; history {history:?}")]
    CouplingFailure { iterations: usize, history: Vec<f64> },
    #[error(transparent)]
    Fem(#[from] FemError),
}

pub type Result<T> = std::result::Result<T, PhysicsError>;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FemError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("degenerate cell {cell}: Jacobian determinant {det:e} at a quadrature point")]
    DegenerateCell { cell: usize, det: f64 },
    #[error("unsupported polynomial degree {0} (supported: 1, 2)")]
    UnsupportedDegree(usize),
    #[error("unsupported expression: {0}")]
    UnsupportedExpression(String),
    #[error("assembly error: {0}")]
    Assembly(String),
    #[error("unknown boundary tag `{0}`")]
    UnknownTag(String),
    #[error("factorization failed: zero pivot at row {row}")]
    ZeroPivot { row: usize },
    #[error("linear solve failed: {0}")]
    Solve(String),
    #[error("point ({x}, {y}) is outside the mesh")]
    PointOutside { x: f64, y: f64 },
}

pub type Result<T> = std::result::Result<T, FemError>;

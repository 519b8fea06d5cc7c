use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (residual {0:.3e})")]
    NotHermitian(f64),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid block partition: {0}")]
    InvalidPartition(String),

    #[error("step size must be positive, got {0}")]
    NonPositiveStep(f64),

    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),

    #[error("identity violated: {what} (residual {residual:.3e})")]
    IdentityViolated { what: String, residual: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

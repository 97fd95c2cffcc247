use thiserror::Error;

#[derive(Debug, Error)]
pub enum FsiError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("mesh resolution error: {0}")]
    Resolution(String),

    #[error("interface topology error: {0}")]
    Topology(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("constraint violation: {0}")]
    ConstraintViolation(String),

    #[error("flux compatibility error: interface flux {flux:e} exceeds tolerance {tol:e}")]
    Compatibility { flux: f64, tol: f64 },

    #[error("solver failure: {message} (relative residual {residual:e})")]
    SolverFailure { message: String, residual: f64 },

    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, FsiError>;

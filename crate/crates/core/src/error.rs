use thiserror::Error;

/// Errors raised by the reconstruction library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("degenerate Cholesky factor: Tr(T†T) = 0")]
    DegenerateFactor,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("record does not match scheme {expected}: got {got}")]
    SchemeMismatch { expected: String, got: String },

    #[error("empty record set")]
    EmptyRecords,

    #[error("not a likelihood maximum: uᵀG⁻¹u = {0:e}")]
    NotAMaximum(f64),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

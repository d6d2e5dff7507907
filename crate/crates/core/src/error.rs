use thiserror::Error;

/// Errors raised by the matrix, privacy and experiment routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix too large for the dense SVD oracle: min dimension {dim} exceeds {limit}")]
    TooLarge { dim: usize, limit: usize },

    #[error("columns are not orthonormal (max deviation {0:.3e})")]
    NotOrthonormal(f64),

    #[error("column {col} has norm {norm} > 1")]
    ColumnNormTooLarge { col: usize, norm: f64 },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

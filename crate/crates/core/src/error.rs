use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("all importance weight was annihilated by the update")]
    DegenerateWeights,

    #[error("{what} = {value} exceeds the enumeration guard {limit}")]
    Guard {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors that a caller should report as bad input rather than
    /// an internal failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig(_)
                | Error::Parse { .. }
                | Error::Validation(_)
                | Error::NotSymmetric { .. }
                | Error::DimensionMismatch { .. }
        )
    }

    pub fn is_guard(&self) -> bool {
        matches!(self, Error::Guard { .. })
    }
}

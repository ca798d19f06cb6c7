use std::io;

/// Errors raised while loading data or computing metrics.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("malformed file: {0}")]
    Format(String),

    #[error("non-finite value at row {row} (column {col})")]
    NonFinite { row: usize, col: usize },

    #[error("embedding set must have at least one row and one column (got {n}x{dim})")]
    Empty { n: usize, dim: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid k={k} for a set of {n} samples (need 1 <= k <= N-1)")]
    InvalidK { k: usize, n: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("row {row} is degenerate (zero variance), cannot standardize")]
    DegenerateRow { row: usize },

    #[error("fixed-point iteration failed to converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("matrix is numerically singular (condition estimate {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("spectral density is degenerate: {0}")]
    DegenerateDensity(String),

    #[error("no outliers present; location is undefined")]
    NoAnomaly,

    #[error("outlier weights are undefined: mixed-sign eigenvalues for a nonnegative polynomial")]
    WeightingUndefined,

    #[error("signal matrix has numerical rank {rank}, exceeding the low-rank bound {bound}")]
    HighRank { rank: usize, bound: usize },

    #[error("eigendecomposition failed: {0}")]
    Linalg(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}

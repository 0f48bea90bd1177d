use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the toolkit.
///
/// Variants are grouped by how a caller is expected to react: bad input data,
/// bad configuration, or a numerical failure on otherwise valid input.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("no rows in chain")]
    NoRows,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("coordinate {coord} has zero variance")]
    ZeroVariance { coord: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown lag window '{0}'")]
    UnknownWindow(String),

    #[error("invalid window parameter: {0}")]
    InvalidWindowParam(String),

    /// Condition `n > 2 b_n` failed.
    #[error("truncation point b_n = {bn} requires n > {}, got n = {n}", 2 * bn)]
    TruncationTooLarge { n: usize, bn: usize },

    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("estimate is not positive definite (min eigenvalue {min_eigenvalue:e})")]
    IndefiniteEstimate { min_eigenvalue: f64 },

    #[error("matrix is singular: {0}")]
    Singular(String),

    #[error("eigen decomposition did not converge after {sweeps} sweeps (off-diagonal residual {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("non-finite result: {0}")]
    NonFiniteResult(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    /// True for errors caused by numerical properties of valid input
    /// (indefinite or singular matrices, non-convergence).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite { .. }
                | Error::IndefiniteEstimate { .. }
                | Error::Singular(_)
                | Error::NoConvergence { .. }
                | Error::NonFiniteResult(_)
                | Error::ZeroVariance { .. }
        )
    }

    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

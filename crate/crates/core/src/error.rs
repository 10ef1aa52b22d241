use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, got {actual}")]
    DimensionMismatch {
        op: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite entry at position {0}")]
    NonFinite(usize),

    #[error("matrix is {rows}x{cols}, expected a square matrix")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric: |m[{i}][{j}] - m[{j}][{i}]| = {gap:e}")]
    NotSymmetric { i: usize, j: usize, gap: f64 },

    #[error("empty matrix or vector")]
    Empty,

    #[error("matrix is rank deficient: smallest singular value {sigma_min:e} <= {tolerance:e}")]
    RankDeficient { sigma_min: f64, tolerance: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(
        "enumeration needs {required} subsets but the budget is {budget}; \
         use the randomized lower bound instead"
    )]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("no recovery guarantee applies: delta_a + C*theta_ab = {value} >= 1")]
    NoGuarantee { value: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

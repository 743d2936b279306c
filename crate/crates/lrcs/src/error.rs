//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates a documented precondition
    /// (dimension mismatch, non-orthonormal input, invalid range, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A configuration is internally inconsistent (bad grid, bad split,
    /// unknown key, over-budget memory estimate, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// The per-column least-squares system for column `k` is rank deficient.
    #[error("column {k}: rank-deficient least squares (sketched basis has numerical rank < r){}",
            iter.map(|t| format!(" at iteration {t}")).unwrap_or_default())]
    RankDeficientColumn { k: usize, iter: Option<usize> },

    /// A dense factorization failed or produced an unusable result.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The solver stopped mid-run; `history_len` iterations completed
    /// before the failure.
    #[error("solver aborted at iteration {iter} (after {history_len} completed): {source}")]
    SolverAborted {
        iter: usize,
        history_len: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed metadata: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}

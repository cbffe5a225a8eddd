use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,

    #[error("columns are not linearly independent: {0}")]
    RankDeficient(String),

    #[error("degenerate residual degrees of freedom: n = {n}, selected support = {support}")]
    DegenerateDf { n: usize, support: usize },

    #[error("degenerate cross-validation folds: {0}")]
    DegenerateFolds(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("dataset carries no ground truth")]
    MissingTruth,

    #[error("numerical failure at coordinate {index}: {reason}")]
    Numerical { index: usize, reason: String },

    #[error("degenerate debiasing residual: |z'x| = {0:e}")]
    DegenerateResidual(f64),

    #[error(
        "Metropolis-Hastings acceptance rate {rate:.4} is below 1%; use a larger sigma_n"
    )]
    LowAcceptance { rate: f64 },

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::Unsupported(_) => 2,
            Error::DimensionMismatch(_)
            | Error::NonFinite(_)
            | Error::RankDeficient(_)
            | Error::MissingTruth
            | Error::DegenerateFolds(_)
            | Error::Parse { .. }
            | Error::Io(_)
            | Error::Json(_) => 3,
            Error::NotPositiveDefinite
            | Error::DegenerateDf { .. }
            | Error::Numerical { .. }
            | Error::DegenerateResidual(_)
            | Error::LowAcceptance { .. } => 4,
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn dim(msg: impl Into<String>) -> Error {
    Error::DimensionMismatch(msg.into())
}

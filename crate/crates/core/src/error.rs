use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numeric domain error: {0}")]
    NumericDomain(String),

    #[error("solver failure in {block}: {reason}")]
    SolverFailure { block: String, reason: String },

    #[error("optimizer failure: {reason} (KKT residual {residual:.3e})")]
    OptimizerFailure { reason: String, residual: f64 },

    #[error("i/o failure at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn solver(block: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::SolverFailure {
            block: block.into(),
            reason: reason.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) => 2,
            Error::NumericDomain(_) | Error::SolverFailure { .. } | Error::OptimizerFailure { .. } => 3,
            Error::Io { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

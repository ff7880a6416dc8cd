use std::io;

use thiserror::Error;

/// Errors produced anywhere in the Sg2 pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or configuration failed validation.
    #[error("invalid parameter: {0}")]
    Invalid(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A detector registered no clicks, so correlations cannot be normalized.
    #[error("detector {0} has zero singles; cannot normalize correlations")]
    ZeroSingles(char),

    #[error("fit did not converge after {iterations} iterations (last iterate {last:?})")]
    NoConvergence { iterations: usize, last: Vec<f64> },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("click stream format error at byte {offset}: {reason}")]
    Format { offset: u64, reason: String },

    #[error("click stream version mismatch: file has v{found}, this build reads v{expected}")]
    Version { found: u32, expected: u32 },

    /// The stream was produced by a different configuration than the one
    /// supplied for analysis.
    #[error("config mismatch: {0}")]
    ConfigMismatch(String),

    #[error("config parse error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::Invalid(msg.into())
}

impl Error {
    /// Process exit code for this error: 2 for invalid input, 3 for I/O and
    /// file-format problems, 4 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invalid(_) | Error::Dimension(_) | Error::Config(_) | Error::ConfigMismatch(_) => 2,
            Error::Io(_) | Error::Format { .. } | Error::Version { .. } | Error::Json(_) => 3,
            Error::Numerical(_) | Error::NoConvergence { .. } | Error::ZeroSingles(_) => 4,
        }
    }
}

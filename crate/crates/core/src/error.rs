//! Error type shared across the pipeline stages.

use thiserror::Error;

/// Errors produced by pipeline operations.
#[derive(Debug, Error)]
pub enum Error {
    /// Input violated a documented precondition or invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// A file could not be parsed; `line` is 1-based.
    #[error("format error at line {line}: {message}")]
    Format { line: u64, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn format(line: u64, msg: impl Into<String>) -> Self {
        Error::Format {
            line,
            message: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed file contents; `offset` is the byte position at which
    /// decoding failed.
    #[error("format error at byte {offset}: {reason}")]
    Format { offset: u64, reason: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn format(offset: u64, reason: impl Into<String>) -> Self {
        Error::Format {
            offset,
            reason: reason.into(),
        }
    }

    pub fn shape(reason: impl Into<String>) -> Self {
        Error::Shape(reason.into())
    }

    pub fn config(reason: impl Into<String>) -> Self {
        Error::Config(reason.into())
    }

    pub fn domain(reason: impl Into<String>) -> Self {
        Error::Domain(reason.into())
    }

    pub fn parse(reason: impl Into<String>) -> Self {
        Error::Parse(reason.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

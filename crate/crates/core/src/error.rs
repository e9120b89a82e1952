use std::fmt;

use thiserror::Error;

/// Errors raised across the engine. The command-line front end maps each
/// variant onto its own exit code.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed text input: polynomial expressions, moment keys, model scripts.
    #[error("parse error at offset {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    /// A file did not follow its documented layout.
    #[error("format error: {0}")]
    Format(String),

    /// Incompatible matrix or model dimensions.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A transfer map could not be inverted.
    #[error("singular transfer map: weight-{weight} block is not invertible")]
    Singular { weight: usize },

    /// The model combines nodes in a way no transfer map covers.
    #[error("unsupported model pattern: {0}")]
    Unsupported(String),

    /// Arguments outside an operation's domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A numeric estimate left its domain (e.g. a non-positive determinant estimate).
    #[error("estimate undefined: {0}")]
    Undefined(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(pos: usize, msg: impl fmt::Display) -> Self {
        Error::Parse {
            pos,
            msg: msg.to_string(),
        }
    }

    pub(crate) fn dim(msg: impl fmt::Display) -> Self {
        Error::Dimension(msg.to_string())
    }

    pub(crate) fn invalid(msg: impl fmt::Display) -> Self {
        Error::InvalidInput(msg.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

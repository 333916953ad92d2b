//! Crate-wide error type.

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An input vector or matrix does not have the shape the operation requires.
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// A value outside the operation's domain (nonpositive std, empty batch, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The caller violated an API contract (stepping a finished episode, ...).
    #[error("usage error: {0}")]
    Usage(String),

    /// A loss or parameter became NaN/Inf; training must stop.
    #[error("non-finite value in {0}")]
    NonFinite(String),

    /// A serialized file is malformed. `offset` is the byte at which parsing failed.
    #[error("parse error in {path} at byte {offset}: {message}")]
    Parse {
        path: PathBuf,
        offset: u64,
        message: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("demonstration collection failed: {0}")]
    Collection(String),

    #[error("did not converge: {0}")]
    Convergence(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

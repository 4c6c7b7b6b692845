use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration value (qubit count, depth, ranges, ...).
    #[error("configuration error: {0}")]
    Config(String),
    /// An API contract was violated by the caller (shapes, lengths, indices).
    #[error("usage error: {0}")]
    Usage(String),
    /// Malformed binary input.
    #[error("parse error at byte offset {offset}: {message}")]
    Parse { offset: u64, message: String },
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

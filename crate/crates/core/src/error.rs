use thiserror::Error;

/// Errors produced by the library.
///
/// The CLI maps [`Error::Domain`] and [`Error::Validation`] to exit code 2 and
/// [`Error::Capacity`] to exit code 3.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violates an operation's precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// A guard on enumeration size, word length or search effort was hit.
    #[error("capacity error: {0}")]
    Capacity(String),

    /// An experiment specification failed validation; every violation is listed.
    #[error("invalid experiment specification:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),

    /// A construction failed one of its own machine checks.
    #[error("internal check failed: {0}")]
    Internal(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn capacity(msg: impl Into<String>) -> Error {
    Error::Capacity(msg.into())
}

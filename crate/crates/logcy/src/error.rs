use thiserror::Error;

/// Library error. `Invalid` covers bad user input; `Internal` signals a
/// violated internal invariant.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("internal failure: {0}")]
    Internal(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }

    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Invalid(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

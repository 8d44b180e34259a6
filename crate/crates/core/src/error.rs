use thiserror::Error;

/// Failure modes shared by every module.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input outside the supported range: {0}")]
    BoundedInput(String),
    #[error("singular input: {0}")]
    Singular(String),
    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("regularity failure: {0}")]
    Regularity(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("wrong phase space: expected {expected}, got {got}")]
    WrongSpace { expected: String, got: String },
    #[error("schema error: {0}")]
    Schema(String),
}

pub type Result<T> = std::result::Result<T, Error>;

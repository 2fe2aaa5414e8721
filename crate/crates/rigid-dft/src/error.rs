use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("operation not supported for shape kind {0}")]
    UnsupportedKind(&'static str),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("grid does not cover the interaction support: {0}")]
    GridTooSmall(String),
    #[error("singular Gram matrix")]
    SingularGram,
    #[error("kernel basis incompatible with moment closure: {0}")]
    Incompatible(String),
    #[error("kernel is not axially reducible")]
    NotAxial,
}

pub type Result<T> = std::result::Result<T, Error>;

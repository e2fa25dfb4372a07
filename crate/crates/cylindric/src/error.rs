use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("pole error: {0}")]
    Pole(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("resource error: {0}")]
    Resource(String),
    #[error("malformed tiling: {0}")]
    Malformed(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

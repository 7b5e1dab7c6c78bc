use thiserror::Error;

/// Errors produced by the array algebra and distribution routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("index out of range: {0}")]
    Index(String),
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("rank deficient: {0}")]
    Rank(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable machine-readable category, emitted by the CLI as `error_code`.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "dimension",
            Error::Index(_) => "index",
            Error::Singular(_) => "singular",
            Error::Rank(_) => "rank",
            Error::Domain(_) => "domain",
            Error::Capacity(_) => "capacity",
            Error::Parse(_) => "parse",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

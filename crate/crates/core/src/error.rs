use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument error: {0}")]
    Argument(String),
    #[error("resource budget exceeded: {0}")]
    Resource(String),
    #[error("not exactly evaluable: {0}; use the numeric continuation engine")]
    NotExactlyEvaluable(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("factorization error: {0}")]
    Factorization(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("ambiguous cone ownership: {0}")]
    Ambiguity(String),
    #[error("parse error at {line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

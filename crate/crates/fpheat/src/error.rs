use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Parameter triple (s, p, d) outside the admissible range.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// Input data violates a precondition (geometry, ordering, ranges).
    #[error("domain error: {0}")]
    Domain(String),

    /// A quadrature could not meet its tolerance contract.
    #[error("quadrature error: {0}")]
    Quadrature(String),

    /// Config file rejected; line numbers are 1-based.
    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    /// An experiment contract failed (nonzero exit for the CLI).
    #[error("contract failure: {0}")]
    Contract(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

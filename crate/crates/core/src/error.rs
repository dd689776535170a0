use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("incompatible operands: {0}")]
    Incompatible(String),
    #[error("element is not a unit (vanishing constant term)")]
    NonUnit,
    #[error("constant term must be positive: {0}")]
    NonPositive(String),
    #[error("derivative budget exhausted in direction {direction}")]
    Budget { direction: usize },
    #[error("insufficient truncation: {0}")]
    Truncation(String),
    #[error("value not representable in the {backend} backend: {what}")]
    Backend { backend: &'static str, what: String },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("degenerate system: {0}")]
    Degenerate(String),
    #[error("inconsistent data: {0}")]
    Inconsistent(String),
    #[error("numerical solver failure: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;

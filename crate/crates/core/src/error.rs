use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("|theta| = {theta} is not below the admissible radius {limit}")]
    ContractionViolation { theta: f64, limit: f64 },

    #[error("iteration did not converge within {iterations} steps (last residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("rejected: {0}")]
    Rejected(String),

    #[error("linear algebra failure: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn argument(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

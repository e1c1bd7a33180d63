use thiserror::Error;

/// Errors raised by the rate-distortion computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("solver did not converge after {iterations} steps (residual {residual:e})")]
    Solver { iterations: usize, residual: f64 },
    #[error("inadmissible spectrum: {0}")]
    Admissibility(String),
    #[error("Toeplitz truncation of order {order} is numerically singular")]
    DegenerateToeplitz { order: usize },
    #[error("insufficient numerical precision: {0}")]
    Precision(String),
    #[error("unknown {kind} `{name}` (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

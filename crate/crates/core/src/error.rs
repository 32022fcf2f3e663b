use thiserror::Error;

/// Errors produced by model construction, estimation and the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("distribution for state {state}, action {action} is not stochastic: {detail}")]
    NotStochastic {
        state: usize,
        action: usize,
        detail: String,
    },

    #[error("infeasible interval polytope at state {state}, action {action}: {detail}")]
    Infeasible {
        state: usize,
        action: usize,
        detail: String,
    },

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("generation failed: {0}")]
    Generation(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

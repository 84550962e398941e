use thiserror::Error;

/// Errors produced by permuton constructions and solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("resolution mismatch: {left} vs {right}")]
    ResolutionMismatch { left: usize, right: usize },

    #[error("{divisor} does not divide {n}")]
    NotDivisor { divisor: usize, n: usize },

    #[error("column {column} of G(x, .) is not invertible (zero-mass y-band at cell {row})")]
    SingularColumn { column: usize, row: usize },

    #[error("characteristic left the unit interval: X = {value} at x = {x}")]
    FlowEscaped { x: f64, value: f64 },

    #[error("quadrature did not converge (residual {residual:e})")]
    Quadrature { residual: f64 },

    #[error("not converged after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("target outside the feasible region: {0}")]
    Infeasible(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

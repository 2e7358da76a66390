use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature did not reach tolerance {tol:e} (error estimate {estimate:e}, {intervals} subintervals)")]
    Quadrature {
        tol: f64,
        estimate: f64,
        intervals: usize,
    },

    #[error("grid: {0}")]
    Grid(String),

    #[error("index assumptions violated: {0}")]
    Gate(String),

    #[error("solver diverged at iteration {iteration}: residual {residual:e} exceeds twice the minimum {minimum:e}")]
    Divergence {
        iteration: usize,
        residual: f64,
        minimum: f64,
    },

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("tail not summable: {0}")]
    Tail(String),

    #[error("config: {0}")]
    Config(String),

    #[error("parse: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn grid(msg: impl Into<String>) -> Self {
        Error::Grid(msg.into())
    }
}

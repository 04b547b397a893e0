use thiserror::Error;

/// Errors produced by the homogenization library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("kernel singularity: {0}")]
    Singular(String),

    #[error("conjugate gradient did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    Solver { iterations: usize, residual: f64 },

    #[error("fixed-point iteration did not converge after {iterations} outer iterations (last residual {residual:.3e})")]
    Convergence {
        iterations: usize,
        residual: f64,
        trace: Box<crate::schemes::FixedPointTrace>,
    },

    #[error("no sign change on [{lo}, {hi}] while solving {what}: f(lo) = {f_lo:.3e}, f(hi) = {f_hi:.3e}")]
    Bracket {
        what: String,
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("energy slice is not concave: {0}")]
    NonConcave(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("inclusion packing failed: {0}")]
    Packing(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

use crate::lazy_svd::PartialSolve;

/// Errors raised by the estimation, stopping and decomposition routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("truncation index {t} outside [0, {dimension}]")]
    TruncationOutOfRange { t: f64, dimension: usize },

    #[error("noise draw not retained; stochastic error needs a simulated observation")]
    MissingNoise,

    #[error("coefficient stream ended after {read} of {expected} coefficients")]
    TruncatedStream { read: usize, expected: usize },

    #[error("power iteration did not converge after {iterations} iterations (best sigma {best_sigma})")]
    NoConvergence {
        iterations: usize,
        best_sigma: f64,
        best_v: Vec<f64>,
    },

    #[error("deflated operator vanished after {computed} triplets")]
    RankDeficient { computed: usize },

    #[error("triplet budget of {budget} exhausted before the stopping rule fired")]
    BudgetExceeded {
        budget: usize,
        partial: Box<PartialSolve>,
    },

    #[error("quadrature accuracy {target:e} not reached (estimate {estimate}, error {achieved:e})")]
    Accuracy {
        target: f64,
        achieved: f64,
        estimate: f64,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

use thiserror::Error;

use crate::optimize::MinimizationResult;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Two points coincide under a kernel that is singular on the diagonal.
    #[error("singular kernel: points {i} and {j} coincide")]
    Singularity { i: usize, j: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("entropic solver did not converge in {iterations} iterations (last marginal gap {last_gap:.3e})")]
    NonConvergence { iterations: usize, last_gap: f64 },

    /// The line search gave up; the configuration reached so far is attached.
    #[error("line search stalled after {} iterations", .0.iterations_used)]
    Stall(Box<MinimizationResult>),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// Recovers the partial result carried by a stall, if any.
    pub fn into_stalled(self) -> std::result::Result<MinimizationResult, Error> {
        match self {
            Error::Stall(result) => Ok(*result),
            other => Err(other),
        }
    }
}

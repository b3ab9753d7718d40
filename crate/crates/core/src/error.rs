use thiserror::Error;

use crate::geometry::Point;

/// Failure modes shared by every module of the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Malformed or mismatched arguments (dimensions, lengths, ranges).
    #[error("invalid input: {0}")]
    Input(String),
    /// A value violates a mathematical invariant (non-SPD matrix, zero-mass conditioning, ...).
    #[error("domain error: {0}")]
    Domain(String),
    /// The operation is not defined for the requested geometry or map.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// An iterative solver stopped before reaching its tolerance.
    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence {
        what: String,
        iterations: usize,
        residual: f64,
        /// Residual (or step) history, oldest first.
        trace: Vec<f64>,
        /// Best iterate seen before giving up, when one exists.
        best: Option<Box<Point>>,
    },
    /// A size limit of an exact algorithm was exceeded.
    #[error("capacity exceeded: {0}")]
    Capacity(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn unsupported(msg: impl Into<String>) -> Self {
        Error::Unsupported(msg.into())
    }

    pub(crate) fn capacity(msg: impl Into<String>) -> Self {
        Error::Capacity(msg.into())
    }

    pub(crate) fn convergence(
        what: impl Into<String>,
        iterations: usize,
        residual: f64,
        trace: Vec<f64>,
        best: Option<Point>,
    ) -> Self {
        Error::Convergence {
            what: what.into(),
            iterations,
            residual,
            trace,
            best: best.map(Box::new),
        }
    }
}

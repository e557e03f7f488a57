use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the documented domain of the routine.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two fields or a field and an operator do not live on the same grid.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A linear solve could not be completed.
    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    /// A time integration produced non-finite values or lost its step size.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A series, continued fraction or quadrature did not converge.
    #[error("no convergence: {0}")]
    Convergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

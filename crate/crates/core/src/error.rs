use thiserror::Error;

/// Failures surfaced by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A root search could not bracket a sign change.
    #[error("root not bracketed on [{lo}, {hi}]: f(lo) = {f_lo:e}, f(hi) = {f_hi:e}")]
    NotBracketed { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    /// An iterative or adaptive procedure stopped before reaching its tolerance.
    #[error("{what} did not converge: estimate {estimate:e}, error {error:e}")]
    NotConverged { what: &'static str, estimate: f64, error: f64 },

    /// Dense linear algebra failed (singular system, non-definite matrix, ...).
    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    /// Two objects that must share a grid or a sector do not.
    #[error("grid or sector mismatch: {0}")]
    Mismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

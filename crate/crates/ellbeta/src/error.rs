//! Error types shared across the crate.

use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by special-function evaluation, kernel composition,
/// domain validation and quadrature.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An input lies outside the admissible domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A factor of an infinite product vanished in a denominator; the
    /// offending lattice indices and the argument are reported so callers
    /// can steer samplers and contours away.
    #[error("pole encountered at {what} (j={j}, k={k}), argument {arg}")]
    Pole {
        what: &'static str,
        j: usize,
        k: usize,
        arg: Complex64,
    },

    /// The truncation policy's term budget was exhausted before the tail
    /// bound was satisfied.
    #[error("truncation error: {needed} terms needed, {max_terms} allowed")]
    Truncation { needed: usize, max_terms: usize },

    /// A rejection sampler failed to find an admissible point.
    #[error("sampler starvation after {tries} tries for {what}")]
    Starvation { what: String, tries: usize },

    /// Quadrature failed to reach the requested tolerance.
    #[error("quadrature did not converge: last error estimate {err_estimate:.3e}")]
    Unconverged { err_estimate: f64 },

    /// Malformed run configuration.
    #[error("config error: {0}")]
    Config(String),

    /// An unknown identity id was requested from the battery.
    #[error("unknown identity id: {0}")]
    UnknownIdentity(String),

    /// Oracle/fixture mismatch or fixture corruption.
    #[error("fixture error: {0}")]
    Fixture(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

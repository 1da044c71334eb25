//! Error type shared by all modules.

use thiserror::Error;

/// Errors raised by construction, evaluation and measurement routines.
#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Evaluation requested at a pole or other singular point.
    #[error("singular point: {0}")]
    Singular(String),

    /// A series or iteration failed to reach the requested tolerance.
    #[error("did not converge: {what} (after {terms} terms, residual {residual:.3e})")]
    Convergence {
        what: &'static str,
        terms: usize,
        residual: f64,
    },

    /// A monotonicity certificate failed; `at` is the violating abscissa.
    #[error("certification failed: {what} at x = {at} (value {value:.6e})")]
    Certification { what: String, at: f64, value: f64 },

    /// A size or memory cap was exceeded; `estimate` is the projected count.
    #[error("resource cap exceeded: {what} (estimated {estimate})")]
    ResourceCap { what: &'static str, estimate: u64 },

    /// Argument outside the supported range.
    #[error("out of range: {0}")]
    OutOfRange(String),

    /// Operation not defined for this object (e.g. derivative of an atomic
    /// template).
    #[error("not applicable: {0}")]
    NotApplicable(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

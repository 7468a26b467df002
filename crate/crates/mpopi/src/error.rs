//! Error type shared across the library.

use std::fmt;

/// Errors produced by the numerics, controller, and environments.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A vector or matrix did not have the expected size.
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    /// A covariance matrix was not symmetric within tolerance.
    NotSymmetric { max_asymmetry: f64 },
    /// Cholesky factorization failed even after regularization retries.
    NotPositiveDefinite,
    /// A trajectory cost was not finite; carries the offending sample index.
    NonFiniteCost { sample: usize },
    /// Dynamics produced a non-finite state; carries the step index within
    /// the rollout (for the car model this is the integration substep).
    NonFiniteState { step: usize },
    /// Same as `NonFiniteState` but tagged with the car index in a
    /// multi-car environment.
    NonFiniteCarState { car: usize, step: usize },
    /// An operation needed more samples than the batch provided.
    InsufficientSamples { needed: usize, got: usize },
    /// A rollout failed; carries the horizon step and the underlying error.
    Rollout { step: usize, source: Box<Error> },
    /// A track definition file could not be parsed.
    TrackParse { line: usize, reason: String },
    /// A track did not satisfy a structural requirement (e.g. closure).
    TrackInvalid { reason: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch {
                what,
                expected,
                got,
            } => write!(f, "dimension mismatch for {what}: expected {expected}, got {got}"),
            Error::NotSymmetric { max_asymmetry } => {
                write!(f, "covariance not symmetric (max asymmetry {max_asymmetry:e})")
            }
            Error::NotPositiveDefinite => {
                write!(f, "covariance not positive definite after regularization")
            }
            Error::NonFiniteCost { sample } => {
                write!(f, "non-finite trajectory cost for sample {sample}")
            }
            Error::NonFiniteState { step } => {
                write!(f, "dynamics produced a non-finite state at step {step}")
            }
            Error::NonFiniteCarState { car, step } => {
                write!(f, "car {car} produced a non-finite state at substep {step}")
            }
            Error::InsufficientSamples { needed, got } => {
                write!(f, "operation needs at least {needed} samples, got {got}")
            }
            Error::Rollout { step, source } => {
                write!(f, "rollout failed at horizon step {step}: {source}")
            }
            Error::TrackParse { line, reason } => {
                write!(f, "track file parse error at line {line}: {reason}")
            }
            Error::TrackInvalid { reason } => write!(f, "invalid track: {reason}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;

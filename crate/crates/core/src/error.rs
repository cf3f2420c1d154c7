use thiserror::Error;

use crate::optim::RunTrace;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// The smallest eigenvalue fell at or below the configured floor; the point
    /// is not on the manifold.
    #[error("matrix is not positive definite (min eigenvalue {min_eig:e} <= floor {floor:e})")]
    NotPositiveDefinite { min_eig: f64, floor: f64 },

    #[error("scalar function undefined at spectrum value {value:e}")]
    DomainError { value: f64 },

    /// `I + Y` is not positive definite, so the exponential map is undefined
    /// for this tangent vector. Shrink the step.
    #[error("exponential map undefined: min eigenvalue of I+Y is {min_eig:e}")]
    ExpDomainViolation { min_eig: f64 },

    #[error("input matrix is numerically singular")]
    SingularInput,

    #[error("point is not critical: ||egrad||_F = {grad_norm:e} > {tol:e}")]
    NotCritical { grad_norm: f64, tol: f64 },

    #[error("no admissible step at iteration {iter}: {reason}")]
    StepFailure {
        iter: usize,
        reason: String,
        trace: Box<RunTrace>,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

//! Crate-wide error type.
//!
//! Every recoverable failure carries the quantities that triggered it so a
//! caller (or a test) can decide whether the failure is genuine or a
//! tolerance mismatch.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operand shapes are incompatible for the requested operation.
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    /// Two functions or vectors belong to differently configured spaces.
    SpaceMismatch { left: String, right: String },
    /// Elimination hit a pivot below the relative threshold.
    SingularMatrix { pivot: f64, threshold: f64 },
    /// A symmetric eigensolve was requested for a matrix that is not
    /// symmetric (or has non-negligible imaginary parts).
    NotSymmetric { asymmetry: f64, threshold: f64 },
    /// The scaled operator norm exceeds the configured exponential bound.
    Overflow { norm: f64, limit: f64 },
    /// The measured coercivity constant is not bounded away from zero.
    NotCoercive { m2: f64 },
    /// The extension system `lambda*I - A_ext - P` could not be factored.
    SingularExtension { lambda: f64 },
    /// A certified resolvent query used a shift outside the guaranteed
    /// window (0, m2/||S||^2].
    WindowViolation { lambda: f64, window: f64 },
    /// A computed inverse failed its residual check.
    InverseCheck { residual: f64, threshold: f64 },
    /// A reflection parameter lies outside the admissible interval [-1, 1].
    InvalidBoundary { k: f64 },
    /// A diffusion coefficient sample is zero or negative.
    NonPositiveCoefficient { min: f64 },
    /// A time step system `I - dt*A` (or its Crank-Nicolson analogue)
    /// could not be factored.
    SingularStep { step: usize, dt: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, got } => write!(
                f,
                "dimension mismatch: expected {}x{}, got {}x{}",
                expected.0, expected.1, got.0, got.1
            ),
            Error::SpaceMismatch { left, right } => {
                write!(f, "space mismatch: {left} vs {right}")
            }
            Error::SingularMatrix { pivot, threshold } => write!(
                f,
                "singular matrix: pivot magnitude {pivot:.3e} below threshold {threshold:.3e}"
            ),
            Error::NotSymmetric {
                asymmetry,
                threshold,
            } => write!(
                f,
                "matrix is not symmetric: asymmetry {asymmetry:.3e} exceeds {threshold:.3e}"
            ),
            Error::Overflow { norm, limit } => write!(
                f,
                "matrix exponential overflow guard: scaled norm {norm:.3e} exceeds {limit:.3e}"
            ),
            Error::NotCoercive { m2 } => {
                write!(f, "closure operator is not coercive: measured m2 = {m2:.3e}")
            }
            Error::SingularExtension { lambda } => write!(
                f,
                "extension system is singular at lambda = {lambda:.6e}"
            ),
            Error::WindowViolation { lambda, window } => write!(
                f,
                "certified resolvent query needs lambda in (0, {window:.6e}], got {lambda:.6e}"
            ),
            Error::InverseCheck { residual, threshold } => write!(
                f,
                "inverse failed residual check: ||A*A_inv - I|| = {residual:.3e} exceeds {threshold:.3e}"
            ),
            Error::InvalidBoundary { k } => write!(
                f,
                "boundary reflection parameter {k} lies outside [-1, 1]"
            ),
            Error::NonPositiveCoefficient { min } => write!(
                f,
                "diffusion coefficient must be strictly positive, found minimum {min:.6e}"
            ),
            Error::SingularStep { step, dt } => write!(
                f,
                "time stepping system singular at step {step} with dt = {dt:.6e}"
            ),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;

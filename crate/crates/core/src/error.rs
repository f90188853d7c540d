//! Error type shared by all modules.

use thiserror::Error;

/// Errors produced by solver, basis construction and file I/O.
#[derive(Error, Debug)]
pub enum Error {
    /// A physical or dimensionless parameter is outside its domain.
    #[error("parameter domain error: {0}")]
    ParamDomain(String),

    /// Invalid run or discretization configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// The vertical eigensolve failed for one horizontal wavenumber.
    #[error("basis construction failed at wavenumber ({0}, {1}): {2}")]
    BasisConstruction(i32, i32, String),

    /// A field was used with a basis or grid it does not belong to.
    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    /// Scalar operation applied to a vector field or vice versa.
    #[error("field kind mismatch: {0}")]
    KindMismatch(String),

    /// Attractor samples carry different metrics.
    #[error("metric mismatch: expected {expected}, got {got}")]
    MetricMismatch { expected: String, got: String },

    /// An operation was called outside its stated precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Coefficient norms exceeded the blowup cap or became non-finite.
    #[error("numerical blowup at t = {t}: {what}")]
    NumericalBlowup { t: f64, what: String },

    /// The adaptive oracle integrator underflowed its step size.
    #[error("oracle stiffness failure at t = {t}: step size underflow")]
    Stiffness { t: f64 },

    /// The oracle integrator refuses problems above its dimension cap.
    #[error("oracle dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    /// File format or version mismatch.
    #[error("format error in {path}: {what}")]
    Format { path: String, what: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Exit code class: 1 config, 2 numerical, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ParamDomain(_)
            | Error::Config(_)
            | Error::BasisMismatch(_)
            | Error::KindMismatch(_)
            | Error::MetricMismatch { .. }
            | Error::Precondition(_) => 1,
            Error::BasisConstruction(..)
            | Error::NumericalBlowup { .. }
            | Error::Stiffness { .. }
            | Error::DimensionCap { .. } => 2,
            Error::Format { .. } | Error::Io(_) => 3,
        }
    }
}

use thiserror::Error;

/// Library error type. Variants are grouped by exit-code mapping in the CLI:
/// invalid inputs (bad configuration, malformed files, precondition violations)
/// versus numerical failures (tolerance unreachable, internal consistency lost).
#[derive(Debug, Error)]
pub enum Error {
    /// A potential or forcing specification failed validation.
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    /// The pointwise lower bound q(x) >= 1 is violated.
    #[error("potential dips below 1: q({x}) = {value}")]
    BelowOne { x: f64, value: f64 },

    /// An argument pair arrived in the wrong order (expected a <= b).
    #[error("arguments out of order: expected {a} <= {b}")]
    ArgumentOrder { a: f64, b: f64 },

    /// A query point lies outside the computed domain.
    #[error("point {x} outside domain [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },

    /// A window or grid parameter is degenerate (non-positive radius, empty grid, ...).
    #[error("invalid window or grid: {0}")]
    InvalidWindow(String),

    /// Sampled data does not match the grid it must align with.
    #[error("sampling mismatch: {0}")]
    SamplingMismatch(String),

    /// Adaptive refinement hit its step/iteration budget before reaching tol.
    #[error("tolerance unreachable: worst residual {worst_residual:.3e} after {steps} steps")]
    RefinementFailure { worst_residual: f64, steps: usize },

    /// An internal invariant that admissible inputs cannot break was violated.
    #[error("internal consistency fault: {0}")]
    InternalFault(String),

    /// Probe sets for asymptotic classification must span both tails and two decades.
    #[error("invalid probe set: {0}")]
    InvalidProbes(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True when the error stems from user input rather than numerics.
    pub fn is_invalid_input(&self) -> bool {
        matches!(
            self,
            Error::InvalidSpec(_)
                | Error::BelowOne { .. }
                | Error::ArgumentOrder { .. }
                | Error::OutOfDomain { .. }
                | Error::InvalidWindow(_)
                | Error::SamplingMismatch(_)
                | Error::InvalidProbes(_)
                | Error::Io(_)
                | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

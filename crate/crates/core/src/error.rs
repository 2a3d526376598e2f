use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid fractional order {value}: {reason}")]
    InvalidOrder { value: f64, reason: &'static str },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("history buffer is empty")]
    EmptyHistory,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operation requires a periodic grid")]
    NonPeriodicGrid,

    #[error("no stable time step found; probe growth factors {growth:?}")]
    Unstable { growth: Vec<f64> },

    #[error("time step {dt} exceeds the explicit stability limit {limit}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("Newton iteration did not converge at omega={omega}; iterates {iterates:?}")]
    NewtonDiverged {
        omega: f64,
        iterates: Vec<(f64, f64)>,
    },

    #[error("nonpositive alpha {alpha} at omega={omega}")]
    NonPositiveAlpha { omega: f64, alpha: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("empty SNR band")]
    EmptyBand,

    #[error("unresolvable pulse: {0}")]
    Unresolved(String),

    #[error("too few usable modes: {0}")]
    TooFewModes(usize),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

use thiserror::Error;

/// Failures reported by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("acceptance probability vanishes (g = 0 with a zero-width window); success probability undefined")]
    UndefinedAcceptance,

    #[error("no entanglement possible: cooperativity {c} does not exceed pi^2/8")]
    NoEntanglementPossible { c: f64 },

    #[error("argument outside the domain of `{op}`: {reason}")]
    Domain { op: &'static str, reason: String },

    #[error("time step {dt:e} s too coarse (limit {limit:e} s): {reason}")]
    StepTooCoarse { dt: f64, limit: f64, reason: &'static str },

    #[error("Riccati solver did not converge (relative residual {residual:e})")]
    RiccatiNotConverged { residual: f64 },

    #[error("Kalman filter diverged at step {step} (covariance trace {trace:e})")]
    FilterDiverged { step: usize, trace: f64 },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    /// True for errors caused by bad user input rather than numerical trouble.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::UnknownPreset(_)
                | Error::Config(_)
                | Error::StepTooCoarse { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}

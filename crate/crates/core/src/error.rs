use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The truncated second moment vanishes, so the 1/alpha scaling is undefined.
    #[error("no small-jump mass below eps = {eps}: alpha(eps) = 0")]
    SmallJumpMassAbsent { eps: f64 },

    #[error("jump intensity is infinite on the band [{delta}, {eps}]")]
    InfiniteIntensity { delta: f64, eps: f64 },

    #[error("expected jump count {expected} exceeds the per-path budget {budget}")]
    JumpBudgetExceeded { expected: f64, budget: f64 },

    #[error("non-finite state at step {step}")]
    NonFinite { step: usize },

    #[error("{blowups} of {paths} paths blew up (limit {limit_fraction})")]
    BlowupThreshold {
        blowups: usize,
        paths: usize,
        limit_fraction: f64,
    },

    #[error("empty sample")]
    EmptySample,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

use thiserror::Error;

/// Failures raised by the curve algebra and the analyses built on it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NcError {
    /// Long-run arrival rate exceeds long-run service rate, so delay and
    /// backlog are unbounded.
    #[error("unstable: arrival rate {arrival} b/s exceeds service rate {service} b/s")]
    UnstableRate { arrival: f64, service: f64 },

    /// A residual service curve is identically zero.
    #[error("null service curve: no residual capacity left")]
    NullService,

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("invalid shaper parameters: {0}")]
    InvalidBls(String),

    #[error("priority clash: {0}")]
    PriorityClash(String),

    #[error("fixed point did not converge after {iterations} iterations")]
    DivergentFixedPoint { iterations: usize },

    #[error("invalid network model: {0}")]
    InvalidModel(String),
}

pub type Result<T> = std::result::Result<T, NcError>;

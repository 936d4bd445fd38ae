use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("time {t} is outside the stored range [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("node time {t} does not advance past the last node time {last}")]
    NonMonotoneTime { t: f64, last: f64 },

    #[error("derivative at the initial node has not been set")]
    MissingDerivative,

    #[error("invalid history: {0}")]
    InvalidHistory(String),

    #[error("invalid delay profile: {0}")]
    InvalidProfile(String),

    #[error("delay profile has no declared limit")]
    NoLimit,

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("fixed-point iteration did not converge at step {step} (t = {t})")]
    NonconvergentStep { step: usize, t: f64 },

    #[error("matrix is not diagonal")]
    NotDiagonal,

    #[error("P is not positive definite")]
    NotPositiveDefinite,

    #[error("consensus denominator {0} is not positive")]
    DegenerateDenominator(f64),

    #[error("consensus map is not strictly increasing near alpha = {0}")]
    NotMonotone(f64),

    #[error("no sign change found for the consensus equation within |alpha| <= {0}")]
    NoBracket(f64),
}

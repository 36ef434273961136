use thiserror::Error;

/// Errors raised by the geometry, measure and experiment layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum HoroError {
    #[error("invalid point: {0}")]
    InvalidPoint(String),
    #[error("invalid net: {0}")]
    InvalidNet(String),
    #[error("invalid pair: {0}")]
    InvalidPair(String),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("alpha must lie in (0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("support explosion: {projected} projected atoms exceed the cap of {cap}")]
    SupportExplosion { projected: usize, cap: usize },
    #[error("lambda violation: {0}")]
    LambdaViolation(String),
    #[error("insufficient escape: displacement {displacement} is below the requested depth {depth}")]
    InsufficientEscape { displacement: f64, depth: usize },
    #[error("insufficient trials: {0}")]
    InsufficientTrials(String),
    #[error("drift confidence interval does not exclude zero (mean {mean}, half-width {half_width})")]
    NoDrift { mean: f64, half_width: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("output error: {0}")]
    Io(String),
}

pub type Result<T, E = HoroError> = std::result::Result<T, E>;

use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("component {index}: {reason}")]
    InvalidComponent { index: usize, reason: String },

    #[error("quadrature did not converge: estimate {estimate:e}, error estimate {error:e}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("log-density sum {peak:e} exceeds the floating-point exponent range")]
    Overflow { peak: f64 },

    #[error("probability {0} outside (0, 1)")]
    ProbabilityOutOfRange(f64),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("root finder failed: {0}")]
    RootFinding(String),

    #[error("optimizer did not converge after {iterations} iterations (objective {objective:e})")]
    NotConverged { iterations: usize, objective: f64 },

    #[error("bandwidth selection failed at observation {index} (x = {x}): {reason}")]
    Bandwidth { index: usize, x: f64, reason: String },

    #[error("rejection sampler envelope violated at x = {x}: ratio {ratio} > threshold {threshold}")]
    EnvelopeViolation { x: f64, ratio: f64, threshold: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

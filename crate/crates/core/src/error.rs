use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("slit condition violated: fiber vector is zero")]
    SlitViolation,
    #[error("point {x:?} lies outside the chart domain")]
    OutsideChart { x: Vec<f64> },
    #[error("metric degenerate at x={x:?}, y={y:?}: {reason}")]
    MetricDegenerate {
        x: Vec<f64>,
        y: Vec<f64>,
        reason: String,
    },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("trajectory left the chart at t={time}")]
    ChartExit { time: f64 },
    #[error("integrator gave up after {steps} steps at t={time}")]
    StepLimit { steps: usize, time: f64 },
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("expression error: {0}")]
    Parse(String),
    #[error("internal consistency failure: {0}")]
    Consistency(String),
    #[error("metric degenerate at every sample point ({points} points)")]
    DegenerateEverywhere { points: usize },
}

impl Error {
    /// Process exit status: 2 configuration, 3 degenerate everywhere,
    /// 4 internal consistency, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_) | Error::Parse(_) | Error::DimensionMismatch { .. } => 2,
            Error::DegenerateEverywhere { .. } => 3,
            Error::Consistency(_) => 4,
            _ => 1,
        }
    }
}

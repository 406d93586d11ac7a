use thiserror::Error;

use crate::engine::OptimizationTrace;

pub type Result<T, E = ProboError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ProboError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid kernel specification: {0}")]
    InvalidKernel(String),

    #[error("invalid mean specification: {0}")]
    InvalidMean(String),

    #[error("training points {first} and {second} coincide (distance <= 1e-10)")]
    DuplicatePoints { first: usize, second: usize },

    #[error("base kernel matrix is not positive definite even with diagonal jitter {jitter:e}; the design is too ill-conditioned for this kernel")]
    IllConditioned { jitter: f64 },

    #[error("training data is empty or inconsistent: {0}")]
    InvalidData(String),

    #[error("invalid bounds: {0}")]
    InvalidBounds(String),

    #[error("invalid acquisition: {0}")]
    InvalidAcquisition(String),

    #[error("objective returned no finite value over {evaluated} evaluated points")]
    NonFiniteObjective { evaluated: usize },

    #[error("grid of {points} points exceeds the cap of 1e7")]
    GridTooLarge { points: f64 },

    #[error("unknown function `{name}`; available: {available}")]
    UnknownFunction { name: String, available: String },

    #[error("point {x} lies outside the tabulated domain [{lower}, {upper}]")]
    OutOfDomain { x: f64, lower: f64, upper: f64 },

    #[error("malformed tabulated target: {0}")]
    Tabulated(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid experiment plan: {0}")]
    Plan(String),

    #[error("run failed after {} evaluations: {source}", partial.records.len())]
    RunFailed {
        #[source]
        source: Box<ProboError>,
        partial: Box<OptimizationTrace>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl ProboError {
    /// Errors caused by the user's input rather than by a failing computation.
    pub fn is_usage_error(&self) -> bool {
        matches!(
            self,
            ProboError::Config(_)
                | ProboError::Plan(_)
                | ProboError::InvalidKernel(_)
                | ProboError::InvalidMean(_)
                | ProboError::InvalidBounds(_)
                | ProboError::InvalidAcquisition(_)
                | ProboError::UnknownFunction { .. }
                | ProboError::Tabulated(_)
                | ProboError::Json(_)
                | ProboError::DimensionMismatch { .. }
        )
    }
}

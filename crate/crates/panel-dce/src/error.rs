use thiserror::Error;

/// Errors produced by panel construction, estimation and inference.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("path length {got} does not match expected length {expected}")]
    PathLength { expected: usize, got: usize },

    #[error("treatment index {index} outside alphabet of {size} labels")]
    LabelOutsideAlphabet { index: usize, size: usize },

    #[error("alphabet labels must be numeric here: {0}")]
    NonNumericAlphabet(String),

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("step probability {value} for unit {unit}, period {time} outside (0, 1)")]
    ProbabilityBound { unit: usize, time: usize, value: f64 },

    #[error("outcome table needs {bits} path bits per unit-period, cap is {cap}")]
    TableTooLarge { bits: u32, cap: u32 },

    #[error("empty cell collection for {0} average")]
    EmptyCells(String),

    #[error("zero denominator in {0}")]
    ZeroDenominator(String),

    #[error("singular design matrix at period {time}")]
    SingularDesign { time: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the numerical engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid shift model: {0}")]
    InvalidModel(String),

    #[error("word {word} is not admissible")]
    Inadmissible { word: String },

    #[error("depth {requested} exceeds the tabulation limit {limit}")]
    DepthTooLarge { requested: usize, limit: usize },

    #[error("depth {have} is too small, need at least {need}")]
    DepthTooSmall { have: usize, need: usize },

    #[error("expected {expected} values at depth {depth}, got {got}")]
    LengthMismatch {
        depth: usize,
        expected: usize,
        got: usize,
    },

    #[error("functions belong to different shift models")]
    ModelMismatch,

    #[error("weight is not strictly positive (min value {min})")]
    NotPositive { min: f64 },

    #[error("weight is not normalized: sup |L(1) - 1| = {defect:e}")]
    NotNormalized { defect: f64 },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        residual: f64,
        diagnostic: String,
    },
}

impl Error {
    /// True for failures of an iterative method, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NotConverged { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

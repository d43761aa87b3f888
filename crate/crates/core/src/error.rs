use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("vectors are linearly dependent (numerical rank {rank} of {count})")]
    LinearDependence { rank: usize, count: usize },

    #[error("shift weight at position {index} is zero")]
    ZeroWeight { index: usize },

    #[error("scalar at position {index} is zero")]
    ZeroScalar { index: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index sequence is empty")]
    EmptyIndices,

    #[error("index sequence is not strictly increasing at position {0}")]
    NonIncreasingIndices(usize),

    #[error("exactness window violated: generator {generator} has support {support}, power {power} exceeds dimension {dim}")]
    WindowViolation {
        generator: usize,
        support: usize,
        power: usize,
        dim: usize,
    },

    #[error("grid resolution insufficient for term {term}: budget {budget:e}, best achieved {achieved:e} at level {level}")]
    BudgetUnmet {
        term: usize,
        budget: f64,
        achieved: f64,
        level: u32,
    },

    #[error("operation requires p = 2, found p = {0}")]
    RequiresHilbert(f64),

    #[error("serialization: {0}")]
    Serde(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

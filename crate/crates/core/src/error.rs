use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("no residual coordinates: candidate model contains the true support")]
    NoResidualCoordinates,

    #[error("exact cover too large: {size} distinct points (limit {limit})")]
    ExactCoverTooLarge { size: usize, limit: usize },

    #[error("subset budget exceeded: {count} subsets requested, budget is {budget}")]
    BudgetExceeded { count: u128, budget: u128 },

    #[error("invalid design spec: {0}")]
    InvalidSpec(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("MLE does not exist at tolerance: |beta| = {norm:.3e} exceeds cap {cap:.3e}")]
    MleDoesNotExist { norm: f64, cap: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

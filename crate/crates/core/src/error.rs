use thiserror::Error;

/// Errors raised by the kernels, samplers, algorithms and bound evaluators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is rank deficient: {0}")]
    RankDeficient(String),
    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("matrix is not positive semidefinite: {0}")]
    NotPsd(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid embedding spec: {0}")]
    InvalidSpec(String),
    #[error("rank {rank} exceeds sketch dimension {ell}")]
    RankExceedsSketch { rank: usize, ell: usize },
    #[error("embedding dimension too small: {0}")]
    DimensionTooSmall(String),
    #[error("no admissible comparison rank q")]
    NoAdmissibleQ,
    #[error("rank {rank} is below sketch dimension {ell}")]
    RankBelowSketch { rank: usize, ell: usize },
    #[error("parameter order violated: {0}")]
    ParameterOrderViolation(String),
    #[error("infeasible budget: {0}")]
    InfeasibleBudget(String),
    #[error("invalid experiment grid: {0}")]
    InvalidGrid(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("output error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

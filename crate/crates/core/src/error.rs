use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("covariance matrix is not symmetric")]
    NotSymmetric,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("empty truncation set ({lo}, {hi})")]
    EmptySet { lo: f64, hi: f64 },

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("exact HMC step exceeded {0} wall reflections")]
    TooManyReflections(usize),

    #[error("multilevel degeneracy: {0}")]
    MultilevelDegeneracy(String),

    #[error("degenerate statistic: {0}")]
    DegenerateStatistic(String),

    #[error("internal sampler error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

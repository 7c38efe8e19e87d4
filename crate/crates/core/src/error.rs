use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not symmetric positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotSpd { min_eigenvalue: f64 },

    #[error("autoregression is not stationary (companion spectral radius {radius})")]
    NotStationary { radius: f64 },

    #[error("linear system is singular")]
    SingularSystem,

    #[error("matrix is outside the unit-singular-value set (largest singular value {sigma_max})")]
    NotInVm { sigma_max: f64 },

    #[error("structured parameters out of bounds: {0}")]
    OutOfBounds(String),

    #[error("matrix is not orthogonal (max |HᵀH - I| = {deviation:e})")]
    NotOrthogonal { deviation: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("hyperparameter must be positive: {0}")]
    NonPositiveHyper(String),

    #[error("marginal variance is infinite (gamma shape {shape} <= 1)")]
    InfiniteVariance { shape: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("{divergent} of {total} post-warmup transitions diverged")]
    AllDivergent { divergent: usize, total: usize },

    #[error("too few draws: {0}")]
    TooFewDraws(String),

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("predictive density underflowed to zero")]
    ZeroDensity,

    #[error("regression design is rank deficient")]
    RankDeficientDesign,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

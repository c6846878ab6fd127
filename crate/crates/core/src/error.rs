use thiserror::Error;

/// Errors raised by the spectral toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("relativistic coupling beta = {0} outside (0, 2/pi]")]
    InvalidCoupling(f64),

    #[error("perturbation support {support} exceeds half the grid extent {r_max}")]
    SupportTooLarge { support: f64, r_max: f64 },

    #[error("expected {expected} zeros of v_{{{n},{l}}}, bracketing found {found}")]
    ZeroCount { n: u32, l: u32, expected: usize, found: usize },

    #[error("eigensolver did not converge: {0}")]
    NonConvergence(String),

    #[error("contour rejected: {0}")]
    Contour(String),

    #[error("truncation mismatch: {0}")]
    TruncationMismatch(String),

    #[error("cluster count mismatch: {0}")]
    ClusterMismatch(String),

    #[error("insufficient samples: need at least {needed}, have {have}")]
    InsufficientSamples { needed: usize, have: usize },

    #[error("resolvent expansion invalid: {0}")]
    Divergence(String),

    #[error("{0}")]
    Precondition(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

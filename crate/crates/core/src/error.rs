use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("{op} does not support the {variant} measure")]
    UnsupportedMeasure {
        op: &'static str,
        variant: &'static str,
    },

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("solver did not converge after {iterations} iterations (gradient residual {residual:e}, newton step {newton_step:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        newton_step: f64,
    },

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("ensemble covariance is singular: rank {rank} of {dim}")]
    SingularCovariance { rank: usize, dim: usize },

    #[error("oracle domain error: {0}")]
    OracleDomain(String),

    #[error("grid oracle supports at most 2 dimensions, got {dim}")]
    OracleScale { dim: usize },

    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

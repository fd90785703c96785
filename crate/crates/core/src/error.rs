use thiserror::Error;

/// Errors raised anywhere in the solver stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("non-finite value {value} at x = {x}")]
    NonFinite { x: f64, value: f64 },

    #[error("Newton iteration did not converge for target {target} after {iterations} iterations")]
    NewtonDiverged { target: f64, iterations: usize },

    #[error("matrix is not positive definite (pivot {index} = {pivot})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("matrix is singular at pivot {0}")]
    Singular(usize),

    #[error("iterative solver did not converge: {iterations} iterations, relative residual {residual:e}")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("iterative solver broke down: {0}")]
    Breakdown(String),

    #[error("eigensolver failure: {0}")]
    Eigen(String),

    #[error("norm drift {drift:e} exceeds limit {limit:e} at t = {time}")]
    NormDrift { drift: f64, limit: f64, time: f64 },

    #[error("spurious state {index} (energy {energy}, large-component weight {large_weight})")]
    SpuriousState {
        index: usize,
        energy: f64,
        large_weight: f64,
    },

    #[error("run halted after step {step} as requested")]
    Halted { step: usize },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

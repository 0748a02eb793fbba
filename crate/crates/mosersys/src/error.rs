use thiserror::Error;

/// Unified error type for domain construction, solvers and the runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("field does not belong to this grid (expected {expected}, got {got})")]
    GridMismatch { expected: String, got: String },

    #[error("domain has no interior nodes: {0}")]
    DomainEmpty(String),

    #[error("invalid argument: {0}")]
    InvalidArg(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("exponent argument {arg:.3e} exceeds overflow cap {cap:.0}; rescale the field first")]
    Overflow { arg: f64, cap: f64 },

    #[error("{what} did not converge after {iters} iterations (residual {residual:.3e})")]
    NonConvergence {
        what: String,
        iters: usize,
        residual: f64,
    },

    #[error("constraint projection failed: {0}")]
    Projection(String),

    #[error("iterate collapsed to a semitrivial state ({component} component vanished)")]
    SemitrivialCollapse { component: &'static str },

    #[error("regime failure: {0}")]
    RegimeFailure(String),

    #[error("seed ground states have numerically vanishing overlap")]
    DegenerateOverlap,

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the solvers and the batch front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("field length mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("matrix is not positive definite (breakdown at iteration {iteration})")]
    NotPositiveDefinite { iteration: usize },

    #[error("{what}: iteration cap {cap} reached, last residual {residual:e}")]
    IterationCap {
        what: &'static str,
        cap: usize,
        residual: f64,
    },

    #[error("dense oracle is limited to {cap} unknowns, got {n}")]
    OracleTooLarge { n: usize, cap: usize },

    #[error("singular matrix (zero pivot at row {0})")]
    Singular(usize),

    #[error("newton diverged after {iterations} steps, residual {residual:e}")]
    NewtonDivergence {
        iterations: usize,
        residual: f64,
        trace: Vec<f64>,
    },

    #[error("homotopy failed at t = {t}: {source}")]
    Homotopy {
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("{0}")]
    NotPositive(String),

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

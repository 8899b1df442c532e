use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller supplied an argument outside the operation's domain.
    #[error("usage error: {0}")]
    Usage(String),

    /// Operator or state dimensions do not match.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A problem would exceed the configured memory bound.
    #[error("size limit exceeded: {what} needs {required}, limit is {limit}; {hint}")]
    SizeLimit {
        what: &'static str,
        required: usize,
        limit: usize,
        hint: &'static str,
    },

    #[error("integration failed at t = {t:.6e} (step {h:.3e}): {reason}")]
    Integration { t: f64, h: f64, reason: String },

    #[error("trajectory {index} (seed {seed}) failed: {source}")]
    Trajectory {
        index: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    /// Linear solve broke down (singular or nearly degenerate factorization).
    #[error("solver failure: {0}")]
    Solver(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

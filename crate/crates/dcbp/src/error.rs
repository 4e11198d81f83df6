use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("argument error: {0}")]
    Argument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("near-degenerate spectrum: diagonal gap {gap:e} below threshold {eps:e}")]
    NearDegenerateSpectrum { gap: f64, eps: f64 },

    #[error("matrix is not positive regular (reducible)")]
    NotPositiveRegular,

    #[error("iteration failed to converge after {iters} iterations (residual {residual:e})")]
    Convergence { iters: usize, residual: f64 },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("not an M-matrix: shift {shift} does not exceed dominant eigenvalue {dominant}")]
    NotMMatrix { shift: f64, dominant: f64 },

    #[error("invalid model: {0} violation(s); first: {1}")]
    InvalidModel(usize, String),

    #[error("degenerate ensemble: every replication hit the event cap")]
    DegenerateEnsemble,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("model file error: {0}")]
    ModelFile(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, QcaError>;

#[derive(Debug, Error)]
pub enum QcaError {
    #[error("requested dimension {rows}x{cols} overflows")]
    DimensionOverflow { rows: usize, cols: usize },

    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("matrix decomposition failed: {0}")]
    Decomposition(String),

    #[error("site index {site} out of range for a layer of {n_sites} sites")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("integration produced a non-finite state at t = {t}")]
    Diverged { t: f64 },

    /// Relaxation did not meet the residual threshold before `t_max`. The
    /// order parameter reached at termination is carried along so callers can
    /// still classify near-critical points.
    #[error("no stationary state by t = {t} (|dm/dt| = {residual:e}, |mx| = {abs_mx})")]
    NotConverged { t: f64, abs_mx: f64, residual: f64 },

    #[error("dense representation limited to {max} sites, got {n_sites}")]
    TooLargeForDense { n_sites: usize, max: usize },

    #[error("training diverged at step {step}: loss rose for {streak} consecutive updates (last loss {loss:e})")]
    TrainingDiverged { step: usize, streak: usize, loss: f64 },

    #[error("training targets are degenerate: spread {spread:e} below {threshold:e}")]
    DegenerateTrainingSet { spread: f64, threshold: f64 },

    #[error("malformed input: {0}")]
    MalformedInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

use thiserror::Error;

/// Errors produced anywhere in the discretization pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cell index 0 is not a valid cell")]
    InvalidCell,

    #[error("spacing must be 1/n for a positive integer n, got {0}")]
    InvalidSpacing(f64),

    #[error("invalid Lévy measure: {0}")]
    InvalidMeasure(String),

    #[error("quadrature did not converge: estimated error {achieved:e} exceeds tolerance {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("tail truncation cap K = {cap} reached with residual mass {residual:e} above {tolerance:e}")]
    TailTruncation { cap: u64, residual: f64, tolerance: f64 },

    #[error("invalid difference offset {0}")]
    InvalidOffset(f64),

    #[error("non-finite sample {value} at x = {x}")]
    Sampling { x: f64, value: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("coefficient {name} invalid at t = {t}, x = {x}: {reason}")]
    Coefficient {
        name: &'static str,
        t: f64,
        x: f64,
        reason: String,
    },

    #[error("explicit integration became unstable at t = {t} (sup norm {sup:e}); reduce dt_fine")]
    Instability { t: f64, sup: f64 },

    #[error("time step {tau} too large: estimated coercivity bound {coercivity:e} requires tau <= {threshold:e}")]
    StepSize { tau: f64, coercivity: f64, threshold: f64 },

    #[error("linear solver did not converge after {iterations} iterations (final residual {:e})", residuals.last().copied().unwrap_or(f64::NAN))]
    SolverNonConvergence { iterations: usize, residuals: Vec<f64> },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

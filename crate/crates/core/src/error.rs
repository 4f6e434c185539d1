//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("pump ratio {0} is at or above threshold (must be < 1)")]
    AboveThreshold(f64),

    #[error("susceptibility denominator vanishes at omega = {omega_rad_per_us} rad/us")]
    Singularity { omega_rad_per_us: f64 },

    #[error("nonphysical input: {0}")]
    NonphysicalInput(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("mode-filter normalization violated: |F| = {max_abs} > 1 (inconsistent conventions)")]
    NormalizationViolation { max_abs: f64 },

    #[error("data format error: {0}")]
    Format(String),

    #[error("data validation error: {0}")]
    Validation(String),

    #[error("fit did not converge after {iterations} iterations (residual {residual})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("rank-deficient fit problem: {0}")]
    RankDeficient(String),

    #[error("Fock cutoff too small: tail population {tail} exceeds threshold {threshold}")]
    CutoffTooSmall { tail: f64, threshold: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code class for the CLI: 2 config, 3 data, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParameter(_) => 2,
            Error::Io(_)
            | Error::Json(_)
            | Error::Csv(_)
            | Error::Format(_)
            | Error::Validation(_)
            | Error::NonphysicalInput(_)
            | Error::DegenerateInput(_) => 3,
            _ => 4,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("size mismatch: expected {expected} samples, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("degenerate frequency: {0}")]
    DegenerateFrequency(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical instability at t = {time}")]
    Instability { time: f64 },

    /// Picard iteration left the contraction ball.
    #[error("Picard iteration did not converge after {iterations} iterations (last residual {last_residual:e}); outside the contraction ball, shrink T or the data")]
    NotContracting {
        iterations: usize,
        last_residual: f64,
        history: Vec<f64>,
    },

    #[error("non-finite integrand at zeta = ({xi}, {eta})")]
    NonFiniteIntegrand { xi: f64, eta: f64 },

    #[error("space-time field must be windowed before taking a Bourgain norm")]
    Unwindowed,

    #[error("config error: {0}")]
    Config(String),

    #[error("bad file format in {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Instability { .. }
            | Error::NotContracting { .. }
            | Error::NonFiniteIntegrand { .. }
            | Error::DegenerateFrequency(_) => 3,
            _ => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "invalid_grid",
            Error::SizeMismatch { .. } => "size_mismatch",
            Error::GridMismatch => "grid_mismatch",
            Error::DegenerateFrequency(_) => "degenerate_frequency",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Instability { .. } => "instability",
            Error::NotContracting { .. } => "not_contracting",
            Error::NonFiniteIntegrand { .. } => "non_finite_integrand",
            Error::Unwindowed => "unwindowed",
            Error::Config(_) => "config",
            Error::Format { .. } => "format",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

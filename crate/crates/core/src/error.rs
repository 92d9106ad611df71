use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("field contains non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("time {t} is outside the admissible range: {reason}")]
    TimeOutOfRange { t: f64, reason: String },

    #[error("degenerate amplitude: P1^2 + Q1^2 = 0")]
    DegenerateAmplitude,

    #[error("grid under-resolved: top-octave spectral fraction {fraction:.3e} exceeds {limit:.1e}")]
    Aliasing { fraction: f64, limit: f64 },

    #[error("Sobolev norm not converged under grid refinement: relative change {change:.3e}")]
    UnderResolved { change: f64 },

    #[error("Picard iteration diverged: ratios {ratios:?}")]
    Divergence { ratios: Vec<f64> },

    #[error("backward evolution blew up at t = {t}: sup norm grew by {growth:.2}x")]
    BlowUp { t: f64, growth: f64 },

    #[error("rate fit needs {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Aliasing { .. }
            | Error::UnderResolved { .. }
            | Error::Divergence { .. }
            | Error::BlowUp { .. } => 3,
            Error::Io { .. } | Error::Serialization(_) => 4,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use std::path::PathBuf;

use crate::extract::Case;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("singular parameters: {0}")]
    Singular(&'static str),

    #[error("field diverged at z = {z}")]
    Divergence { z: f64 },

    #[error("phase undefined for a zero-amplitude field")]
    UndefinedPhase,

    #[error("cannot normalize phasor: probe-only amplitude is zero")]
    Normalization,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("schedule window [{start}, {end}) lies outside a shot of {len} samples")]
    Schedule { start: usize, end: usize, len: usize },

    #[error("degenerate {case} fit: phase undefined")]
    DegenerateFit { case: Case },

    #[error("vacuum calibration failed: peak variance is zero")]
    Calibration,

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("coherent amplitude {alpha} needs more than {cutoff} Fock levels (lost weight {lost:e})")]
    CutoffTooSmall { alpha: f64, cutoff: usize, lost: f64 },

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { path: path.into(), line, msg: msg.into() }
    }

    /// True for errors caused by bad user input rather than a runtime failure.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidParams(_) | Error::Config(_) | Error::UnknownPreset(_) | Error::Json(_)
        )
    }
}

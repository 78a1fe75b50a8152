use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = EnfError> = std::result::Result<T, E>;

/// Every failure the library can report.
///
/// Variants split into two families: validation errors (the caller asked for
/// something ill-posed) and data errors (the inputs on disk or in memory do
/// not support the request). The CLI maps the families to distinct exit
/// codes through [`EnfError::is_validation`].
#[derive(Debug, Error)]
pub enum EnfError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("resolution mismatch: {0}")]
    ResolutionMismatch(String),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("signal of {samples} samples is shorter than one frame of {frame} samples")]
    SignalTooShort { samples: usize, frame: usize },

    #[error("no valid offset: {0}")]
    NoValidOffset(String),

    #[error("missing ground truth offset (k0) for the decision")]
    MissingGroundTruth,

    #[error("parse error in {source_name}: {reason}")]
    Parse { source_name: String, reason: String },

    #[error("segment [{start}, {end}) overlaps an existing segment on grid `{grid}`")]
    Overlap { grid: String, start: f64, end: f64 },

    #[error("requested range contains a gap from {from} to {to} (UTC seconds)")]
    Gap { from: f64, to: f64 },

    #[error("range [{t0}, {t1}) is not covered by the store for grid `{grid}`")]
    Uncovered { grid: String, t0: f64, t1: f64 },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config error: {0}")]
    Config(String),
}

impl EnfError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        EnfError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(source_name: impl Into<String>, reason: impl Into<String>) -> Self {
        EnfError::Parse {
            source_name: source_name.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        EnfError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by ill-posed requests rather than bad data.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            EnfError::InvalidParameter { .. }
                | EnfError::ResolutionMismatch(_)
                | EnfError::LengthMismatch(_)
                | EnfError::MissingGroundTruth
                | EnfError::Config(_)
        )
    }
}

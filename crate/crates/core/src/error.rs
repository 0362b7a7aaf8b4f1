use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("triangle index {index} out of range for grid with {count} triangles")]
    InvalidTriangle { index: usize, count: usize },

    #[error("pattern has zero area")]
    EmptyPattern,

    #[error("mask is empty")]
    EmptyMask,

    #[error("mask dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error("pixel pitch mismatch: {0} vs {1}")]
    PitchMismatch(f64, f64),

    #[error("library is empty")]
    EmptyLibrary,

    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("mesh has no faces")]
    EmptyMesh,

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("pattern lies completely outside the sensor window")]
    OutsideWindow,

    #[error("library generation stalled after {attempts} candidates with {admitted} admitted")]
    GenerationStalled { attempts: usize, admitted: usize },

    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),

    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error("unsupported library version {found:?} (expected {expected:?})")]
    Version { found: String, expected: String },

    #[error("dispersion invariant violated between entries {a} and {b}: {distance} <= {alpha}")]
    Dispersion {
        a: usize,
        b: usize,
        distance: f64,
        alpha: f64,
    },

    #[error("stored Hu moments of entry {label:?} differ from recomputation by {delta}")]
    HuMismatch { label: String, delta: f64 },

    #[error("missing file {0}")]
    MissingFile(PathBuf),

    #[error("corrupt file {path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn corrupt(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Corrupt {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for errors caused by numerical breakdown rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Degenerate(_) | Error::GenerationStalled { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

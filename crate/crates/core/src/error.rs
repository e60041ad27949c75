use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value is outside the documented range.
    #[error("invalid {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("point {re} + {im}i lies below the real axis")]
    BelowRealAxis { re: f64, im: f64 },

    #[error("derivative singularity at {re} + {im}i (branch point of the slit map)")]
    Singularity { re: f64, im: f64 },

    #[error("time {t} outside [0, {total}]")]
    TimeOutOfRange { t: f64, total: f64 },

    #[error("point {re} + {im}i is swallowed by the hull before time {t}")]
    Swallowed { re: f64, im: f64, t: f64 },

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("dyadic level {level} exceeds the maximum {max}")]
    LevelOverflow { level: u32, max: u32 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("insufficient resolution: {0}")]
    InsufficientResolution(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("malformed file {path}: {reason}")]
    Malformed { path: PathBuf, reason: String },

    #[error("unsupported format version {found} in {path} (expected {expected})")]
    VersionMismatch {
        path: PathBuf,
        found: String,
        expected: &'static str,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason,
        }
    }

    pub(crate) fn malformed(path: &std::path::Path, reason: impl Into<String>) -> Self {
        Error::Malformed {
            path: path.to_path_buf(),
            reason: reason.into(),
        }
    }
}

use std::path::PathBuf;

/// Errors produced anywhere in the simulation / learning pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("numerical divergence at t = {time:.3} s: {detail}")]
    Divergence { time: f64, detail: String },

    #[error("induced-velocity solve did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("near-gimbal attitude: |cos(phi) cos(theta)| = {0:.3e}")]
    NearGimbal(f64),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("feature `{0}` has zero spread and cannot be normalized")]
    DegenerateFeature(String),

    #[error("covariance matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("log too short: {len} samples, need at least {needed}")]
    LogTooShort { len: usize, needed: usize },

    #[error("irregular timestamps at sample {index}: expected spacing {expected} s, got {actual} s")]
    IrregularTimestamps {
        index: usize,
        expected: f64,
        actual: f64,
    },

    #[error("malformed {what} at byte offset {offset}: {reason}")]
    Format {
        what: &'static str,
        offset: u64,
        reason: String,
    },

    #[error("unsupported {what} version {found} (expected {expected})")]
    Version {
        what: &'static str,
        found: u32,
        expected: u32,
    },

    #[error("checksum mismatch in {0}")]
    Checksum(PathBuf),

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    TrainingDiverged { epoch: usize, loss: f64 },

    #[error("model was trained for `{trained}` trajectories but is being applied to `{requested}`")]
    TrajectoryMismatch { trained: String, requested: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("i/o error on {path}: {source}")]
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

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

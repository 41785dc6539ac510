//! Crate-wide error type.

use std::io;
use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    /// A file could be read but not understood. `line` is 1-based and counts
    /// physical lines of the underlying file, headers included.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    /// A value violates a documented invariant (fractions off the simplex,
    /// non-positive temperature, empty component list, ...).
    #[error("invalid {what}: {message}")]
    Invalid { what: &'static str, message: String },

    #[error("no Redlich-Kister coefficients for pair {a}-{b}")]
    MissingPairCoefficients { a: String, b: String },

    #[error("correlation for {component} yields non-positive density {rho} kg/m^3 at {t} K")]
    DegenerateCorrelation { component: String, rho: f64, t: f64 },

    #[error("unknown compound {0}")]
    UnknownCompound(String),

    /// Dimension mismatch between tensors, feature vectors, or artifacts.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Two artifacts that must belong to the same run disagree (digests,
    /// feature widths, scaling ranges).
    #[error("incompatible artifacts: {0}")]
    Incompatible(String),

    /// Non-finite loss during training. `stage` names the run that blew up
    /// ("train" for a bare run, the stage name inside the transfer pipeline);
    /// `batch` 0 means the validation pass.
    #[error("{stage} diverged: non-finite loss at epoch {epoch}, batch {batch}")]
    Divergence { stage: String, epoch: usize, batch: usize },

    /// Bad run configuration (flag combinations, out-of-range hyperparameters).
    #[error("configuration error: {0}")]
    Config(String),

    /// Data-level failures that are not tied to a file location.
    #[error("{0}")]
    Data(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn parse(path: impl Into<PathBuf>, line: u64, message: impl Into<String>) -> Self {
        Error::Parse { path: path.into(), line, message: message.into() }
    }

    pub fn invalid(what: &'static str, message: impl Into<String>) -> Self {
        Error::Invalid { what, message: message.into() }
    }
}

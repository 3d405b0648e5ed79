use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("series needs at least {min} values, got {got}")]
    TooShort { min: usize, got: usize },

    #[error("series lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("negative value {value} at row {row} in column `{column}`")]
    NegativeValue { column: String, row: usize, value: f64 },

    #[error("{what} has zero standard deviation")]
    ZeroVariance { what: &'static str },

    #[error("{what} has zero mean")]
    ZeroMean { what: &'static str },

    #[error("degenerate flux fractions: total simulated volume is zero")]
    DegenerateFractions,

    #[error("orthogonal component could not be constructed after {attempts} attempts")]
    DegenerateOrthogonalization { attempts: u32 },

    #[error("corruption step {k} outside 0..={max}")]
    StepOutOfRange { k: u32, max: u32 },

    #[error("parameter `{name}` = {value} is invalid: {reason}")]
    InvalidParameter {
        name: String,
        value: f64,
        reason: String,
    },

    #[error("forcing has {len} days but warm-up needs {warmup} plus at least 2 scored days")]
    ForcingTooShort { len: usize, warmup: usize },

    #[error("{0}")]
    Config(String),

    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },

    #[error("no record carries a value for metric `{0}`")]
    NoValidRecords(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn data(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Data {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn invalid_param(name: &str, value: f64, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            value,
            reason: reason.into(),
        }
    }
}

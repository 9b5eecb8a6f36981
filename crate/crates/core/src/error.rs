use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("feature {index} = {value} lies outside [-1, 1]")]
    EncodingRange { index: usize, value: f64 },

    #[error("invalid {kind} action index {index}")]
    InvalidAction { kind: &'static str, index: usize },

    #[error("episode already finished; call reset first")]
    EpisodeDone,

    #[error("episode not started; call reset first")]
    NotReset,

    #[error("cannot place {vehicles} vehicles without overlap on a {lanes}x{length} m road")]
    InfeasibleSpawn { vehicles: usize, lanes: usize, length: f64 },

    #[error("configuration error at `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("loss requires a non-empty batch with one target per transition ({batch} transitions, {targets} targets)")]
    EmptyBatch { batch: usize, targets: usize },

    #[error("non-finite gradient component {index} = {value} (batch loss {loss})")]
    NonFiniteGradient { index: usize, value: f64, loss: f64 },

    #[error("architecture mismatch: expected {expected}, found {found}")]
    ArchitectureMismatch { expected: String, found: String },

    #[error("parameter vector has length {found}, expected {expected}")]
    ParamLength { expected: usize, found: usize },

    #[error("{path}: {source}")]
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
    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

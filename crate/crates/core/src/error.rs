use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: {left} vs {right} samples")]
    LengthMismatch { left: usize, right: usize },

    #[error("reference signal has zero power")]
    ZeroReference,

    #[error("not a permutation of 0..{n}: {perm:?}")]
    InvalidPermutation { perm: Vec<usize>, n: usize },

    #[error("waveform is empty")]
    EmptyWaveform,

    #[error("no active frames (signal is silent)")]
    NoActiveFrames,

    #[error("utterance is silent, cannot extract an embedding")]
    SilentUtterance,

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("forward cache does not match the given parameters, mixture or permutation")]
    StaleCache,

    #[error("exhaustive permutation search refused for {0} sources (max 8)")]
    TooManySources(usize),

    #[error("clustering needs at least one embedding pair")]
    EmptyInput,

    #[error("assignment tables cover different mixture ids")]
    CoverageMismatch,

    #[error("fixed-label training is missing labels for mixture {0}")]
    MissingLabels(usize),

    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },

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

    pub(crate) fn format(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Format { what, detail: detail.into() }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed entity set: {0}")]
    MalformedDocument(String),

    #[error("entity index `{0}` is not a decimal integer")]
    InvalidIndex(String),

    #[error("duplicate entity index `{0}`")]
    DuplicateIndex(String),

    #[error("entity `{index}` has no \"entity name\"")]
    MissingName { index: String },

    #[error("entity `{index}` has an empty name")]
    EmptyName { index: String },

    #[error("entity `{index}`: value of `{key}` is not a string")]
    NonStringValue { index: String, key: String },

    #[error("entity `{index}`: duplicate property key `{key}`")]
    DuplicateKey { index: String, key: String },

    #[error("property key `{0}` is reserved")]
    ReservedKey(String),

    #[error("{path}:{line}: {message}")]
    Line { path: String, line: usize, message: String },

    #[error("cannot read `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid assignment weights: {0}")]
    InvalidWeights(String),

    #[error("invalid similarity matrix: {0}")]
    InvalidMatrix(String),

    #[error("brute-force assignment supports min(m, n) <= {limit}, got {actual}")]
    DimensionTooLarge { limit: usize, actual: usize },

    #[error("invalid triplet: {0}")]
    InvalidTriplet(String),

    #[error("unknown dataset format `{0}` (expected nyt, conll04 or rebel)")]
    UnknownFormat(String),

    #[error("unknown metric `{0}`")]
    UnknownMetric(String),

    #[error("invalid perturbation config: {0}")]
    InvalidPerturbation(String),

    #[error("duplicate sample id `{0}`")]
    DuplicateSampleId(String),

    #[error("no samples could be joined on id")]
    NoJoinableSamples,

    #[error("correlation needs at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

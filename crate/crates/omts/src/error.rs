use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type; CLI maps every variant to exit code 1.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot parse rational `{0}` (expected `p` or `p/q` with q != 0)")]
    BadRational(String),

    #[error("cannot parse label `{0}` (expected `nu` or `symbol@chrono`)")]
    BadLabel(String),

    #[error("unknown state id `{0}`")]
    UnknownState(String),

    #[error("output dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("model validation failed: {0}")]
    InvalidModel(String),

    #[error("derivation relation references non-initial states: {0}")]
    BadDerivation(String),

    #[error("simulation function table is not total: missing pair ({0}, {1})")]
    PartialTable(String, String),

    #[error("simulation function table failed verification: {0}")]
    UnverifiedTable(String),

    #[error("malformed interval: [{0}, {1}]")]
    BadInterval(String, String),

    #[error("malformed hybrid time domain: {0}")]
    BadDomain(String),

    #[error("malformed sampled arc: {0}")]
    BadArc(String),

    #[error("negative argument: {0}")]
    NegativeArgument(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("i/o error on `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: &str, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_string(),
            source,
        }
    }
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("unknown allocation key (demand {demand}, path {path})")]
    UnknownKey { demand: String, path: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("LP `{lp}` is infeasible")]
    Infeasible { lp: String },

    #[error("LP `{lp}` is unbounded")]
    Unbounded { lp: String },

    #[error("LP `{lp}` exceeded the pivot limit of {limit} iterations")]
    IterationLimit { lp: String, limit: usize },

    #[error("malformed linear program `{lp}`: {reason}")]
    MalformedLp { lp: String, reason: String },

    #[error("waterfilling input: {0}")]
    Waterfill(String),

    #[error("mismatched keys: {0}")]
    MismatchedKeys(String),

    #[error("{0}")]
    Metric(String),

    #[error("generator: {0}")]
    Generator(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Grid, field and partition do not fit together.
    #[error("configuration error: {0}")]
    Config(String),

    /// A numeric parameter is outside its domain.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A caller broke an operation precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The requested computation is too large to run.
    #[error("refused: {0}")]
    Refused(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("unknown optimizer `{0}`")]
    UnknownOptimizer(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short stable identifier, used in machine-readable error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Parameter(_) => "parameter",
            Error::Precondition(_) => "precondition",
            Error::Refused(_) => "refused",
            Error::Parse { .. } => "parse",
            Error::UnknownOptimizer(_) => "unknown-optimizer",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

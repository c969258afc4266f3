use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Dense storage requested beyond the supported lattice size.
    #[error("capacity exceeded: L = {size} exceeds the dense-matrix cap L <= {cap}")]
    Capacity { size: usize, cap: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The invariant is not defined because a quasi-energy gap is closed.
    #[error("undefined invariant: {0}")]
    Gapless(String),

    /// Trapped-pair selection is ambiguous.
    #[error("degenerate selection: {0}")]
    Degenerate(String),

    #[error("series too short: {0}")]
    SeriesTooShort(String),

    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_) | Error::Config { .. } => 2,
            Error::Numerical(_)
            | Error::Gapless(_)
            | Error::Degenerate(_)
            | Error::SeriesTooShort(_) => 3,
            Error::Capacity { .. } => 4,
            Error::Io { .. } | Error::Json(_) => 1,
        }
    }
}

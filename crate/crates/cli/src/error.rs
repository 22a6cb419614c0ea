use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] shift_audit::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },

    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    ManifestMismatch(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Re-labels a core error with the file it came from, keeping its kind.
    pub fn in_file(path: impl Into<PathBuf>, e: shift_audit::Error) -> Self {
        match e {
            shift_audit::Error::Parse { .. } | shift_audit::Error::Json(_) => CliError::Input {
                path: path.into(),
                message: e.to_string(),
            },
            other => CliError::Core(other),
        }
    }

    /// 2 parse error, 3 dimension mismatch, 4 numeric failure, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use shift_audit::Error as E;
        match self {
            CliError::Input { .. } | CliError::Usage(_) => 2,
            CliError::Core(E::Parse { .. } | E::Json(_)) => 2,
            CliError::Core(E::DimensionMismatch { .. }) => 3,
            CliError::Core(E::NonFinite(_)) => 4,
            _ => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

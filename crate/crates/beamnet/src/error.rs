use std::path::{Path, PathBuf};

/// Failures of the std layer, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("bad arguments: {0}")]
    Args(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("format error in {path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("invalid config {path}:{line}: {message}")]
    Config { path: PathBuf, line: usize, message: String },
    #[error(transparent)]
    Core(#[from] beamnet_core::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn format(path: &Path, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }

    /// 2 arguments, 3 I/O, 4 format or validation, 5 numeric failure.
    pub fn exit_code(&self) -> i32 {
        use beamnet_core::Error as E;
        match self {
            Error::Args(_) => 2,
            Error::Io { .. } => 3,
            Error::Format { .. } | Error::Config { .. } => 4,
            Error::Core(E::NonFiniteLoss { .. } | E::NonFiniteGradient(_)) => 5,
            Error::Core(_) => 4,
        }
    }

    /// Short machine-readable class name.
    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            2 => "args",
            3 => "io",
            5 => "numeric",
            _ => "format",
        }
    }
}

use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Input { path: String, source: dagforge::Error },

    #[error("cannot read {path}: {source}")]
    Open { path: PathBuf, source: io::Error },

    #[error("{path}: {source}")]
    Cache { path: PathBuf, source: dagforge::Error },

    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },

    #[error(transparent)]
    Core(#[from] dagforge::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn cache(path: &Path, source: dagforge::Error) -> Self {
        CliError::Cache {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 1 for cache and I/O failures, 2 for bad flags or input.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Input { .. } | CliError::Open { .. } => 2,
            CliError::Core(e) => match e {
                dagforge::Error::Integrity(_) | dagforge::Error::VariantMismatch { .. } => 1,
                _ => 2,
            },
            CliError::Cache { .. } | CliError::Write { .. } | CliError::Io(_) => 1,
        }
    }

    pub fn is_broken_pipe(&self) -> bool {
        matches!(self, CliError::Io(e) if e.kind() == io::ErrorKind::BrokenPipe)
    }
}

pub type CliResult<T> = Result<T, CliError>;

use std::path::PathBuf;
use std::process::ExitCode;

use faqsearch_client::ClientError;

/// Exit status classes. Usage errors exit with 2, via clap.
pub const EXIT_VALIDATION: u8 = 3;
pub const EXIT_IO: u8 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Engine(#[from] faqsearch_core::Error),

    #[error(transparent)]
    Remote(#[from] ClientError),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// True when the input was rejected, as opposed to an environment failure.
    pub fn is_validation(&self) -> bool {
        match self {
            CliError::Engine(e) => e.is_validation(),
            CliError::Remote(e) => e.is_rejection(),
            CliError::Io { .. } => false,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(if self.is_validation() { EXIT_VALIDATION } else { EXIT_IO })
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{0}")]
    Singularity(rollkit_core::Error),

    #[error("numerical failure: {0}")]
    Numerical(rollkit_core::Error),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("verification failed: {0}")]
    Verify(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Singularity(_) | CliError::Numerical(_) => 3,
            CliError::Io { .. } => 4,
            CliError::Verify(_) => 5,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<rollkit_core::Error> for CliError {
    fn from(e: rollkit_core::Error) -> Self {
        use rollkit_core::Error as E;
        match e {
            E::InvalidProfile(_) | E::InvalidBody(_) | E::InvalidArgument(_) | E::Domain { .. } => {
                CliError::Config(e.to_string())
            }
            E::Singularity { .. } => CliError::Singularity(e),
            _ => CliError::Numerical(e),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

use thiserror::Error;

use ermakov_core::Error as CoreError;

/// Failure of one command run. Check failures are not errors; they are
/// reported and mapped to exit code 1 by the caller.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{0}")]
    Runtime(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// 2 for anything wrong with the inputs, 3 for failures while running.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) => match e {
                CoreError::Parse(_)
                | CoreError::Precondition(_)
                | CoreError::NotConservative
                | CoreError::TimeDependent
                | CoreError::UnknownInvariant(_)
                | CoreError::NoetherCondition { .. } => 2,
                _ => 3,
            },
            CliError::Runtime(_) | CliError::Io { .. } => 3,
        }
    }
}

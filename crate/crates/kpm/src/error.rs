use std::path::Path;

use kpm_core::KpmError;

/// Failure of a CLI run, split by who has to fix it.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable or malformed input files.
    #[error("input error: {0}")]
    Input(String),
    /// Invalid flags, parameter values or combinations.
    #[error("configuration error: {0}")]
    Config(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Input(_) => 2,
            Self::Config(_) => 3,
        }
    }

    pub fn input(path: &Path, what: impl std::fmt::Display) -> Self {
        Self::Input(format!("{}: {what}", path.display()))
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Self::input(path, err)
    }
}

/// Library errors surfacing from user-chosen parameters are configuration
/// errors; file parsers map their own failures to [`CliError::Input`].
impl From<KpmError> for CliError {
    fn from(err: KpmError) -> Self {
        Self::Config(err.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

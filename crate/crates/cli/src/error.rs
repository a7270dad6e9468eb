use std::path::PathBuf;

use thiserror::Error;

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("{}: {message}", path.display())]
    Config { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] laplacian_growth::Error),
    /// The run completed but some verification checks failed.
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) | CliError::Config { .. } => EXIT_VALIDATION,
            CliError::Io { .. } => EXIT_IO,
            CliError::Failed(_) => EXIT_NUMERICAL,
            CliError::Core(e) => match e {
                laplacian_growth::Error::Io(_) => EXIT_IO,
                e if e.is_numerical() => EXIT_NUMERICAL,
                _ => EXIT_VALIDATION,
            },
        }
    }
}

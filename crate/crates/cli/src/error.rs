use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unknown preset '{0}'")]
    UnknownPreset(String),
    #[error("unknown experiment kind '{0}'")]
    UnknownKind(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Domain(#[from] zrec_core::Error),
}

impl CliError {
    /// Machine-readable code printed with every failure.
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Config(_) | CliError::UnknownKind(_) => "ConfigInvalid",
            CliError::UnknownPreset(_) => "UnknownPreset",
            CliError::Io(_) => "Io",
            CliError::Domain(e) => e.code(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

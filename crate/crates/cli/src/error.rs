use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("dataset error: {0}")]
    Dataset(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("reproduction mismatch: {0}")]
    Mismatch(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Dataset(_) => 3,
            CliError::Solver(_) => 4,
            CliError::Mismatch(_) => 5,
            CliError::Io(_) => 1,
        }
    }

    pub fn solver(e: impl std::fmt::Display) -> Self {
        CliError::Solver(e.to_string())
    }
}

use thiserror::Error;

/// Failures mapped onto the process exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input: unreadable files, schema violations, invalid models.
    #[error("{0}")]
    Schema(String),
    /// A computation failed to converge or diverged.
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn schema(msg: impl Into<String>) -> Self {
        CliError::Schema(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl From<casimir_gain::Error> for CliError {
    fn from(e: casimir_gain::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Schema(e.to_string())
        }
    }
}

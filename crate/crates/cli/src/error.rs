use thiserror::Error;

/// Failures of a subcommand, each tied to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] greenlab_core::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A declared pass constant or expected exponent was exceeded. The
    /// report has already been written.
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use greenlab_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(E::InvalidInput(_)) => 2,
            CliError::Core(E::Singularity { .. }) => 3,
            CliError::Core(_) => 4,
            CliError::Io(_) => 1,
            CliError::Verification(_) => 5,
        }
    }
}

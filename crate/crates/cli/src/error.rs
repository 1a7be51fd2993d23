use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("{0}")]
    NonConvergence(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(vec![msg.into()])
    }

    /// Process exit code: 2 configuration, 3 non-convergence, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::NonConvergence(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<cbmor_core::Error> for CliError {
    fn from(e: cbmor_core::Error) -> Self {
        use cbmor_core::Error as E;
        match e {
            E::NonConvergence { .. } | E::ElementInversion { .. } | E::SingularSystem { .. } => {
                CliError::NonConvergence(e.to_string())
            }
            E::Io(m) => CliError::Io(m),
            E::Parse { .. } => CliError::Io(e.to_string()),
            other => CliError::config(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

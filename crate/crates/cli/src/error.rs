use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure at {context}: {source}")]
    Numerical {
        context: String,
        #[source]
        source: lindblad_cf::Error,
    },
    #[error("oracle mismatch: {0}")]
    OracleMismatch(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical { .. } => 3,
            CliError::OracleMismatch(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Attaches grid-point context to a core error.
pub trait Context<T> {
    fn at(self, context: impl FnOnce() -> String) -> CliResult<T>;
}

impl<T> Context<T> for lindblad_cf::Result<T> {
    fn at(self, context: impl FnOnce() -> String) -> CliResult<T> {
        self.map_err(|source| match source {
            lindblad_cf::Error::InvalidParameter(msg) => CliError::Config(format!("{}: {msg}", context())),
            e @ lindblad_cf::Error::OracleCap { .. } => CliError::Config(format!("{}: {e}", context())),
            source => CliError::Numerical {
                context: context(),
                source,
            },
        })
    }
}

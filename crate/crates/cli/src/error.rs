use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("{context}: {source}")]
    Numeric {
        context: &'static str,
        #[source]
        source: fraglog_core::Error,
    },
    #[error("acceptance failure: {0}")]
    Acceptance(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Process exit status: 1 usage, 2 numeric failure, 3 acceptance failure.
    ///
    /// Domain errors raised by the core come from out-of-range user
    /// parameters and therefore count as usage errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::Numeric { source: fraglog_core::Error::Domain(_), .. } => 1,
            CliError::Numeric { .. } => 2,
            CliError::Acceptance(_) => 3,
        }
    }
}

/// Attaches a module context to core errors.
pub(crate) trait Context<T> {
    fn context(self, context: &'static str) -> Result<T, CliError>;
}

impl<T> Context<T> for fraglog_core::Result<T> {
    fn context(self, context: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Numeric { context, source })
    }
}

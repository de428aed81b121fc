use std::path::PathBuf;

/// Everything the CLI can fail with, mapped onto process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config [{section}]{}: {message}", if key.is_empty() { String::new() } else { format!(" {key}") })]
    Invalid {
        section: &'static str,
        key: &'static str,
        message: String,
    },
    #[error("unknown bundled config `{0}`")]
    UnknownConfig(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("numeric failure: {0}")]
    Numeric(#[from] dic_core::Error),
    #[error("study criterion failed: {0}")]
    StudyFailed(String),
}

impl CliError {
    /// 2 for configuration and I/O problems, 3 for numeric failures, 4 for
    /// studies whose criterion did not hold.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) | CliError::Invalid { .. } | CliError::UnknownConfig(_) | CliError::Io { .. } => 2,
            CliError::Numeric(_) => 3,
            CliError::StudyFailed(_) => 4,
        }
    }
}

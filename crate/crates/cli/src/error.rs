use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Json {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}:{line}: {message}")]
    EdgeList {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] ppacdc_core::Error),
}

impl CliError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: &str, err: &serde_json::Error) -> Self {
        CliError::Json {
            path: path.to_owned(),
            line: err.line(),
            column: err.column(),
            message: strip_position(&err.to_string()),
        }
    }

    /// Eigen-solver failures get their own exit code.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(ppacdc_core::Error::NoConvergence(_)) => 3,
            _ => 1,
        }
    }
}

fn strip_position(message: &str) -> String {
    match message.rfind(" at line ") {
        Some(idx) => message[..idx].to_owned(),
        None => message.to_owned(),
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

use std::path::PathBuf;

use loadaudit_core::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: u64, message: String },
    #[error("{}: {message}", path.display())]
    Schema { path: PathBuf, message: String },
    #[error("alignment: {0}")]
    Alignment(String),
    #[error("dataset failed validation with {} violation(s)", .0.len())]
    Validation(Vec<Violation>),
    #[error("config: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error(transparent)]
    Core(#[from] loadaudit_core::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    /// Process exit status: 2 for bad input data or configuration, 3 for failures
    /// while running.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Parse { .. } | Self::Schema { .. } | Self::Alignment(_) | Self::Validation(_) | Self::Config(_) | Self::Json { .. } => 2,
            Self::Io { .. } | Self::Csv { .. } | Self::Core(_) => 3,
        }
    }
}

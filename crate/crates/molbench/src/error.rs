use std::path::{Path, PathBuf};

/// Failures surfaced by the harness. Validation problems map to exit code 2,
/// everything else to 1.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {detail}", path.display())]
    Format { path: PathBuf, detail: String },
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.to_path_buf(), source }
    }

    pub fn format(path: &Path, detail: impl ToString) -> Self {
        HarnessError::Format { path: path.to_path_buf(), detail: detail.to_string() }
    }

    pub fn validation(detail: impl ToString) -> Self {
        HarnessError::Validation(detail.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Validation(_) | HarnessError::Format { .. } => 2,
            HarnessError::Io { .. } | HarnessError::Runtime(_) => 1,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

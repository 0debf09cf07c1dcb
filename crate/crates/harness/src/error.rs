use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed dataset. `line` is 1-based for CSV; `offset` is a byte
    /// offset for the binary format.
    #[error("{}{}: {message}", path.display(), location(*line, *offset))]
    Parse {
        path: PathBuf,
        line: Option<u64>,
        offset: Option<u64>,
        message: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Core(#[from] vrpca::Error),
}

fn location(line: Option<u64>, offset: Option<u64>) -> String {
    match (line, offset) {
        (Some(l), _) => format!(":{l}"),
        (None, Some(o)) => format!(" at byte {o}"),
        (None, None) => String::new(),
    }
}

impl HarnessError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for numerical degeneracy in a solver, 1 for everything the user
    /// can fix in the input or configuration.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Core(vrpca::Error::DegenerateIterate { .. } | vrpca::Error::WarmStartFailed { .. }) => 2,
            _ => 1,
        }
    }
}

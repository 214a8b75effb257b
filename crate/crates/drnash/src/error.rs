use std::io;
use std::path::PathBuf;

use drnash_core::equilibrium::EquilibriumError;
use drnash_core::ValidationError;

/// Process exit status for I/O, parse and validation failures.
pub const EXIT_INVALID: i32 = 1;
/// Process exit status when the solver stopped without converging, or the
/// deviation scan found a profitable deviation.
pub const EXIT_NOT_EQUILIBRIUM: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("{}:{line}:{column}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid scenario: {0}")]
    Validation(#[from] ValidationError),

    #[error("solver: {0}")]
    Solve(#[from] EquilibriumError),

    #[error("{}: {message}", path.display())]
    Artifact { path: PathBuf, message: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub fn artifact(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Self::Artifact {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

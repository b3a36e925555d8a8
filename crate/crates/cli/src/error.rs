use std::path::PathBuf;

use mfde_tau_core::problem::ProblemError;
use mfde_tau_core::SolveError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("problem: {0}")]
    Problem(#[from] ProblemError),
    #[error("solver: {0}")]
    Solve(SolveError),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Problem(_) => 4,
            CliError::Solve(_) => 5,
        }
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Problem(p) => CliError::Problem(p),
            other => CliError::Solve(other),
        }
    }
}

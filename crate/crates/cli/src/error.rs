use std::io;
use std::path::PathBuf;

use omest::{CountsError, PosteriorError, SimError};
use thiserror::Error;

pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_RUNTIME: u8 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid counts: {0}")]
    Counts(#[from] CountsError),
    #[error("invalid simulation config: {0}")]
    Sim(#[from] SimError),
    #[error("{0}")]
    Posterior(#[from] PosteriorError),
    #[error("{}: {source}", path.display())]
    File { path: PathBuf, source: io::Error },
    #[error("cannot parse {}: {source}", path.display())]
    Config { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Counts(_) | CliError::Sim(_) | CliError::Config { .. } => {
                EXIT_VALIDATION
            }
            CliError::Posterior(e) => match e {
                PosteriorError::Divergent { .. }
                | PosteriorError::InvalidTolerance(_)
                | PosteriorError::InvalidMass(_) => EXIT_VALIDATION,
                PosteriorError::BudgetExceeded { .. } | PosteriorError::MassNotAchievable { .. } => {
                    EXIT_RUNTIME
                }
            },
            CliError::File { .. } | CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) => EXIT_RUNTIME,
        }
    }

    pub fn file(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::File { path, source }
    }
}

use std::path::PathBuf;

use thiserror::Error;

use ratcov_core::corpus::CorpusError;
use ratcov_core::featmodel::FeatError;
use ratcov_core::llm::LlmError;
use ratcov_core::stats::StatsError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Model(#[from] FeatError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("missing {what} at {path}; run the `{stage}` stage first")]
    Missing {
        what: &'static str,
        path: PathBuf,
        stage: &'static str,
    },
    #[error("{path}: {reason}")]
    Artifact { path: PathBuf, reason: String },
}

impl CliError {
    /// Process exit status. 2 is left to argument parsing errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 3,
            CliError::Io { .. } | CliError::Corpus(_) => 4,
            CliError::Model(_) => 5,
            CliError::Llm(_) => 6,
            CliError::Stats(_) => 7,
            CliError::Missing { .. } | CliError::Artifact { .. } => 8,
        }
    }

    pub fn category(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io { .. } | CliError::Corpus(_) => "input",
            CliError::Model(_) => "model",
            CliError::Llm(_) => "llm",
            CliError::Stats(_) => "stats",
            CliError::Missing { .. } | CliError::Artifact { .. } => "artifact",
        }
    }
}

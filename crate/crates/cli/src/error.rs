use std::path::PathBuf;

use semisup::TrainError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("data: {0}")]
    Data(String),
    #[error("numeric abort: {0}")]
    Numeric(String),
    #[error("{0}: no metrics.json")]
    MissingMetrics(PathBuf),
    #[error("runs mix task types: {0}")]
    MixedTasks(String),
    #[error("epoch {epoch} was not dumped (dumped: {available:?})")]
    EpochNotDumped { epoch: usize, available: Vec<usize> },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("self-test failed: {0}")]
    SelfTest(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    /// 0 success, 2 config error, 3 data error, 4 numeric abort; a failed
    /// self-test exits with 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::MixedTasks(_) => 2,
            CliError::Data(_) | CliError::MissingMetrics(_) | CliError::EpochNotDumped { .. } | CliError::Io { .. } => {
                3
            }
            CliError::Numeric(_) => 4,
            CliError::SelfTest(_) => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::InvalidConfig(msg) => CliError::Config(msg),
            TrainError::NonFiniteLoss { .. } => CliError::Numeric(e.to_string()),
            TrainError::Model(models::ModelError::InvalidSpec(msg)) => CliError::Config(msg),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<datasets::DataError> for CliError {
    fn from(e: datasets::DataError) -> Self {
        match e {
            datasets::DataError::RatioError(msg) => CliError::Config(format!("data: {msg}")),
            other => CliError::Data(other.to_string()),
        }
    }
}

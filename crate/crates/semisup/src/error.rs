use datasets::MetricError;
use models::ModelError;
use ndcore::NdError;
use thiserror::Error;

use crate::log::EpochLog;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("empty dataset: {0}")]
    EmptyDataset(&'static str),
    #[error("non-finite {phase} loss at epoch {epoch}")]
    NonFiniteLoss {
        phase: &'static str,
        epoch: usize,
        /// Rows completed before the abort.
        log: Vec<EpochLog>,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

impl From<NdError> for TrainError {
    fn from(e: NdError) -> Self {
        TrainError::Model(ModelError::Numeric(e))
    }
}

pub type Result<T> = std::result::Result<T, TrainError>;

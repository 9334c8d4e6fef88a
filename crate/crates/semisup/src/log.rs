use serde::{Deserialize, Serialize};

/// One row of the run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Admission threshold used this epoch; empty for strategies without one.
    pub gamma: Option<f64>,
    /// `|D''|`, or the number of training molecules seen.
    pub hybrid_size: usize,
    pub loss_f: f64,
    pub loss_g: Option<f64>,
    pub val_metric: f64,
    pub test_metric: Option<f64>,
    pub wall_ms: u64,
}

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TrainError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Semimol,
    Supervised,
    PiModel,
    FixedThreshold,
    Percentile,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Semimol,
        Strategy::Supervised,
        Strategy::PiModel,
        Strategy::FixedThreshold,
        Strategy::Percentile,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Semimol => "semimol",
            Strategy::Supervised => "supervised",
            Strategy::PiModel => "pi_model",
            Strategy::FixedThreshold => "fixed_threshold",
            Strategy::Percentile => "percentile",
        }
    }

    /// Strategies that train an instructor and admit pseudo samples.
    pub fn uses_instructor(self) -> bool {
        matches!(
            self,
            Strategy::Semimol | Strategy::FixedThreshold | Strategy::Percentile
        )
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Strategy::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown strategy '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Regression,
    Classification,
}

/// Per-sample loss `H_f`. Classification always uses cross-entropy on the
/// logit, whatever is configured here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Mse,
    Rmse,
    Mae,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Rmse,
    Mae,
    RocAuc,
}

impl Metric {
    pub fn lower_is_better(self) -> bool {
        !matches!(self, Metric::RocAuc)
    }
}

/// Optimization and curriculum settings shared by every strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub task: Task,
    pub loss: LossKind,
    pub metric: Metric,
    pub seed: u64,
    pub lr_f: f64,
    pub lr_g: f64,
    pub batch_size: usize,
    /// Main-loop epochs after warmup.
    pub epochs: usize,
    /// Supervised warmup epochs for f; the best validation state is kept.
    pub warmup_epochs_f: usize,
    /// Warmup sweeps of g over D'.
    pub warmup_epochs_g: usize,
    /// Weight on the pseudo-sample term of the target loss.
    pub lambda: f64,
    pub gamma: f64,
    pub delta_gamma: f64,
    pub gamma_min: f64,
    /// Pseudo-labels are refreshed at epochs divisible by `k`.
    pub k: usize,
    /// At most this many pool molecules are used, subsampled once per run.
    pub pool_cap: usize,
    /// Start the main loop with a fresh Adam state instead of continuing
    /// the warmup optimizer.
    pub fresh_optimizer: bool,
    pub consistency_weight: f64,
    pub percentile_start: f64,
    /// Evaluate the test set after every epoch (otherwise only the best
    /// checkpoint is evaluated by the caller).
    pub eval_test_each_epoch: bool,
    /// Epochs whose pseudo pool is kept for inspection.
    pub dump_epochs: Vec<usize>,
    /// Keep the flattened f parameters after every epoch.
    pub trace_params: bool,
    /// Fill `wall_ms` in the log; left at 0 otherwise so logs stay
    /// reproducible byte for byte.
    pub record_wall_time: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            task: Task::Regression,
            loss: LossKind::Mse,
            metric: Metric::Rmse,
            seed: 0,
            lr_f: 1e-4,
            lr_g: 1e-4,
            batch_size: 64,
            epochs: 100,
            warmup_epochs_f: 50,
            warmup_epochs_g: 5,
            lambda: 1.0,
            gamma: 0.9,
            delta_gamma: 0.05,
            gamma_min: 0.0,
            k: 5,
            pool_cap: 5000,
            fresh_optimizer: false,
            consistency_weight: 1.0,
            percentile_start: 0.1,
            eval_test_each_epoch: false,
            dump_epochs: Vec::new(),
            trace_params: false,
            record_wall_time: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(TrainError::InvalidConfig(msg));
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("gamma must lie in [0, 1], got {}", self.gamma));
        }
        if !(self.delta_gamma > 0.0 && self.delta_gamma < 1.0) {
            return bad(format!("delta_gamma must lie in (0, 1), got {}", self.delta_gamma));
        }
        if !(0.0..=self.gamma).contains(&self.gamma_min) {
            return bad(format!("gamma_min must lie in [0, gamma], got {}", self.gamma_min));
        }
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if !(self.lr_f > 0.0 && self.lr_g > 0.0) {
            return bad("learning rates must be positive".into());
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be finite and non-negative, got {}", self.lambda));
        }
        if !(self.consistency_weight >= 0.0 && self.consistency_weight.is_finite()) {
            return bad("consistency_weight must be finite and non-negative".into());
        }
        if !(0.0..=1.0).contains(&self.percentile_start) {
            return bad("percentile_start must lie in [0, 1]".into());
        }
        match (self.task, self.metric) {
            (Task::Regression, Metric::RocAuc) => bad("roc_auc needs a classification task".into()),
            (Task::Classification, Metric::Rmse | Metric::Mae) => {
                bad("classification tasks are scored with roc_auc".into())
            }
            _ => Ok(()),
        }
    }
}

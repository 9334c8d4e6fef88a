use models::{MolInput, TargetModel};
use ndcore::sigmoid;
use serde::{Deserialize, Serialize};

use crate::config::Task;
use crate::error::Result;

/// One unlabeled molecule with its current pseudo-label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PseudoSample {
    /// Position in the (capped) pool.
    pub index: usize,
    pub y_hat: f64,
    /// Latest instructor confidence.
    pub p: f64,
    /// Observability mask; always 0 for pseudo samples.
    pub c: u8,
    pub epoch_assigned: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PseudoPool {
    pub samples: Vec<PseudoSample>,
}

impl PseudoPool {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn y_hat(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.y_hat).collect()
    }

    pub fn p(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.p).collect()
    }
}

/// Converts raw model outputs to pseudo-labels: the value itself for
/// regression, the hard class of the sigmoid for classification.
pub fn pseudo_label(task: Task, output: f64) -> f64 {
    match task {
        Task::Regression => output,
        Task::Classification => {
            if sigmoid(output) >= 0.5 {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Refreshes every pseudo-label from `f` in eval mode when `epoch` is a
/// multiple of `k`; otherwise leaves the pool untouched. Returns whether a
/// refresh happened.
pub fn assign_pseudo_labels(
    f: &TargetModel,
    pool_inputs: &[&MolInput],
    pool: &mut PseudoPool,
    epoch: usize,
    k: usize,
    task: Task,
) -> Result<bool> {
    if !epoch.is_multiple_of(k) {
        return Ok(false);
    }
    let outputs = f.predict(pool_inputs)?;
    pool.samples = outputs
        .into_iter()
        .enumerate()
        .map(|(index, out)| {
            let p = pool.samples.get(index).map_or(0.0, |s| s.p);
            PseudoSample {
                index,
                y_hat: pseudo_label(task, out),
                p,
                c: 0,
                epoch_assigned: epoch,
            }
        })
        .collect();
    Ok(true)
}

/// `D'' = D_train ∪ {pseudo | p >= gamma}`, stored as the labeled count
/// plus admitted pool indices in ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HybridSet {
    pub labeled: usize,
    pub admitted: Vec<usize>,
}

impl HybridSet {
    pub fn len(&self) -> usize {
        self.labeled + self.admitted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn build_hybrid_set(labeled: usize, pool: &[PseudoSample], gamma: f64) -> HybridSet {
    HybridSet {
        labeled,
        admitted: pool.iter().filter(|s| s.p >= gamma).map(|s| s.index).collect(),
    }
}

/// Admits the `ceil(q * M)` most confident pseudo samples; ties go to the
/// lower pool index. Returns the indices ascending.
pub fn percentile_admission(pool: &[PseudoSample], q: f64) -> Vec<usize> {
    // the tolerance keeps products like 0.4 * 5 from rounding up to 3
    let take = ((q.clamp(0.0, 1.0) * pool.len() as f64 - 1e-9).ceil().max(0.0) as usize).min(pool.len());
    let mut order: Vec<&PseudoSample> = pool.iter().collect();
    order.sort_by(|a, b| b.p.total_cmp(&a.p).then(a.index.cmp(&b.index)));
    let mut chosen: Vec<usize> = order[..take].iter().map(|s| s.index).collect();
    chosen.sort_unstable();
    chosen
}

/// Linear ramp of the admitted fraction from `start` at the first epoch to 1
/// at the last.
pub fn percentile_fraction(start: f64, epoch: usize, epochs: usize) -> f64 {
    if epoch + 1 >= epochs {
        return 1.0;
    }
    start + (1.0 - start) * epoch as f64 / (epochs - 1) as f64
}

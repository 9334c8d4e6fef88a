use models::MolInput;

use crate::error::{Result, TrainError};

/// Featurized molecules with targets.
#[derive(Debug, Clone, Default)]
pub struct LabeledSet {
    pub inputs: Vec<MolInput>,
    pub y: Vec<f64>,
    /// Activity-cliff membership, used only for stratified metrics.
    pub cliff: Vec<bool>,
}

impl LabeledSet {
    pub fn new(inputs: Vec<MolInput>, y: Vec<f64>) -> Self {
        let cliff = vec![false; y.len()];
        LabeledSet { inputs, y, cliff }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn refs(&self) -> Vec<&MolInput> {
        self.inputs.iter().collect()
    }

    pub(crate) fn check(&self, what: &'static str) -> Result<()> {
        if self.is_empty() {
            return Err(TrainError::EmptyDataset(what));
        }
        if self.inputs.len() != self.y.len() || self.cliff.len() != self.y.len() {
            return Err(TrainError::InvalidConfig(format!(
                "{what}: inputs, targets and cliff flags differ in length"
            )));
        }
        Ok(())
    }
}

/// Everything a training run consumes.
#[derive(Debug, Clone, Default)]
pub struct TrainData {
    pub train: LabeledSet,
    pub val: LabeledSet,
    pub test: Option<LabeledSet>,
    /// Unlabeled molecules, before the pool cap is applied.
    pub pool: Vec<MolInput>,
}

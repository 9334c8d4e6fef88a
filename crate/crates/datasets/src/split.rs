use log::warn;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::DataError;
use crate::records::{LabeledRecord, SplitTag};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ratios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Ratios {
    pub fn new(train: f64, val: f64, test: f64) -> Result<Self, DataError> {
        let r = Ratios { train, val, test };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(DataError::RatioError(format!(
                "negative or non-finite ratio in {parts:?}"
            )));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(DataError::RatioError(format!("ratios sum to {sum}, expected 1")));
        }
        Ok(())
    }
}

impl Default for Ratios {
    fn default() -> Self {
        Ratios {
            train: 0.8,
            val: 0.1,
            test: 0.1,
        }
    }
}

/// How records are grouped before proportional allocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stratify {
    /// Equal-count bins over the sorted labels.
    Quantiles(usize),
    /// One stratum per class label.
    Classes,
}

/// Record indices of each partition, in ascending order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Partition {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Partition {
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train.len(), self.val.len(), self.test.len())
    }
}

fn strata(records: &[LabeledRecord], stratify: Stratify) -> Vec<usize> {
    let n = records.len();
    match stratify {
        Stratify::Classes => records.iter().map(|r| usize::from(r.y > 0.5)).collect(),
        Stratify::Quantiles(bins) => {
            let bins = bins.max(1);
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| records[a].y.total_cmp(&records[b].y).then(a.cmp(&b)));
            let mut out = vec![0; n];
            for (rank, &i) in order.iter().enumerate() {
                out[i] = rank * bins / n;
            }
            out
        }
    }
}

/// Stratified split with exact global sizes.
///
/// Each stratum is shuffled and its members get evenly spaced keys in
/// `(0, 1)`; sorting all records by key interleaves the strata, so any
/// prefix of that order draws from each stratum in proportion to its size.
/// Validation takes the first slice of the order, test the next, and train
/// the rest. If every record carries a split tag the tags are used verbatim.
pub fn split<R: Rng + ?Sized>(
    records: &[LabeledRecord],
    ratios: Ratios,
    stratify: Stratify,
    rng: &mut R,
) -> Result<Partition, DataError> {
    ratios.validate()?;
    if records.iter().all(|r| r.split.is_some()) && !records.is_empty() {
        let mut p = Partition::default();
        for (i, r) in records.iter().enumerate() {
            match r.split.unwrap() {
                SplitTag::Train => p.train.push(i),
                SplitTag::Val => p.val.push(i),
                SplitTag::Test => p.test.push(i),
            }
        }
        return Ok(p);
    }
    if records.iter().any(|r| r.split.is_some()) {
        warn!("only some records carry split tags; ignoring all tags");
    }

    let n = records.len();
    let n_val = ((n as f64) * ratios.val).round() as usize;
    let n_test = (((n as f64) * ratios.test).round() as usize).min(n - n_val.min(n));
    let n_val = n_val.min(n);

    let labels = strata(records, stratify);
    let n_strata = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_strata];
    for (i, &s) in labels.iter().enumerate() {
        members[s].push(i);
    }
    let mut keyed: Vec<(f64, usize, usize)> = Vec::with_capacity(n);
    for (s, group) in members.iter_mut().enumerate() {
        group.shuffle(rng);
        let len = group.len() as f64;
        for (j, &i) in group.iter().enumerate() {
            keyed.push(((j as f64 + 0.5) / len, s, i));
        }
    }
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut p = Partition::default();
    for (pos, &(_, _, i)) in keyed.iter().enumerate() {
        if pos < n_val {
            p.val.push(i);
        } else if pos < n_val + n_test {
            p.test.push(i);
        } else {
            p.train.push(i);
        }
    }
    p.train.sort_unstable();
    p.val.sort_unstable();
    p.test.sort_unstable();
    Ok(p)
}

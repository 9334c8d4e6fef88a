use chemgraph::{morgan_fingerprint, string_similarity, tanimoto, Fingerprint};

use crate::records::LabeledRecord;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CliffThresholds {
    /// Minimum structural similarity, in `(0, 1]`.
    pub similarity: f64,
    /// Minimum absolute label difference, `> 0`.
    pub potency: f64,
}

impl Default for CliffThresholds {
    fn default() -> Self {
        CliffThresholds {
            similarity: 0.9,
            potency: 1.0,
        }
    }
}

/// Two similar molecules with a large property gap; `i < j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CliffPair {
    pub i: usize,
    pub j: usize,
    pub similarity: f64,
    pub delta_potency: f64,
}

/// Fingerprint Tanimoto or SMILES string similarity, whichever is larger.
pub fn pair_similarity(fp_a: &Fingerprint, smiles_a: &str, fp_b: &Fingerprint, smiles_b: &str) -> f64 {
    let t = tanimoto(fp_a, fp_b).expect("fingerprints share one width");
    t.max(string_similarity(smiles_a, smiles_b))
}

/// Finds every pair with `similarity >= thresholds.similarity` and
/// `|y_i - y_j| >= thresholds.potency`, given a pairwise similarity.
///
/// Labels are sorted once; for each molecule only partners at least
/// `potency` above it in that order are scored, so similarity is evaluated
/// only on pairs that already satisfy the potency condition. Output is
/// sorted by `(i, j)`.
pub fn cliff_pairs_by<F>(y: &[f64], thresholds: CliffThresholds, similarity: F) -> Vec<CliffPair>
where
    F: Fn(usize, usize) -> f64,
{
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| y[a].total_cmp(&y[b]).then(a.cmp(&b)));
    let mut pairs = Vec::new();
    let mut start = 0;
    for (a, &lo) in order.iter().enumerate() {
        // the first partner index only moves forward as y[lo] grows
        start = start.max(a + 1);
        while start < order.len() && y[order[start]] - y[lo] < thresholds.potency {
            start += 1;
        }
        for &hi in &order[start..] {
            let (i, j) = if lo < hi { (lo, hi) } else { (hi, lo) };
            let s = similarity(i, j);
            if s >= thresholds.similarity {
                pairs.push(CliffPair {
                    i,
                    j,
                    similarity: s,
                    delta_potency: (y[i] - y[j]).abs(),
                });
            }
        }
    }
    pairs.sort_by_key(|a| (a.i, a.j));
    pairs
}

/// Detects cliffs among `records`, setting `cliff_flag` on every member of a
/// pair (and clearing it elsewhere).
pub fn detect_cliffs(
    records: &mut [LabeledRecord],
    thresholds: CliffThresholds,
    radius: usize,
    width: usize,
) -> Vec<CliffPair> {
    let fps: Vec<Fingerprint> = records
        .iter()
        .map(|r| morgan_fingerprint(&r.graph, radius, width))
        .collect();
    let y: Vec<f64> = records.iter().map(|r| r.y).collect();
    let pairs = cliff_pairs_by(&y, thresholds, |i, j| {
        pair_similarity(&fps[i], &records[i].smiles, &fps[j], &records[j].smiles)
    });
    for r in records.iter_mut() {
        r.cliff_flag = false;
    }
    for p in &pairs {
        records[p.i].cliff_flag = true;
        records[p.j].cliff_flag = true;
    }
    pairs
}

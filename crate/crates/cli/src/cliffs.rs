use std::fmt::Write as _;
use std::path::Path;

use datasets::{detect_cliffs, load_labeled_csv, CliffPair, CliffThresholds, ColumnMap};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CliffReport {
    pub thresholds: CliffThresholds,
    pub records: usize,
    pub dropped: usize,
    pub pairs: Vec<CliffPair>,
    /// Molecules that belong to at least one pair.
    pub flagged: usize,
}

/// Finds all activity-cliff pairs in a labeled CSV.
pub fn cmd_cliffs(
    path: &Path,
    columns: &ColumnMap,
    thresholds: CliffThresholds,
    radius: usize,
    width: usize,
) -> Result<CliffReport> {
    let valid = thresholds.similarity > 0.0 && thresholds.similarity <= 1.0 && thresholds.potency > 0.0;
    if !valid {
        return Err(CliError::Config(
            "cliff similarity must lie in (0, 1] and potency be positive".into(),
        ));
    }
    let report = load_labeled_csv(path, columns)?;
    let mut records = report.records;
    let pairs = detect_cliffs(&mut records, thresholds, radius, width);
    Ok(CliffReport {
        thresholds,
        records: records.len(),
        dropped: report.dropped,
        flagged: records.iter().filter(|r| r.cliff_flag).count(),
        pairs,
    })
}

impl CliffReport {
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# similarity >= {}, |delta| >= {}",
            self.thresholds.similarity, self.thresholds.potency
        );
        let _ = writeln!(s, "records: {} ({} dropped)", self.records, self.dropped);
        let _ = writeln!(s, "cliff pairs: {}", self.pairs.len());
        let _ = writeln!(s, "cliff molecules: {}", self.flagged);
        s
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        let err = |e: csv::Error| CliError::Data(e.to_string());
        w.write_record(["i", "j", "similarity", "delta_potency"]).map_err(err)?;
        for p in &self.pairs {
            w.write_record([
                p.i.to_string(),
                p.j.to_string(),
                p.similarity.to_string(),
                p.delta_potency.to_string(),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| CliError::Data(e.to_string()))
    }
}

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use chemgraph::parse_smiles;
use log::warn;

use crate::error::DataError;
use crate::records::{LabeledRecord, SplitTag, UnlabeledRecord};

/// Header names of the labeled CSV columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMap {
    pub smiles: String,
    pub label: String,
    /// Optional; ignored when the header lacks it.
    pub split: Option<String>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            smiles: "smiles".into(),
            label: "label".into(),
            split: Some("split".into()),
        }
    }
}

/// Parsed rows plus the rows that were skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadReport<T> {
    pub records: Vec<T>,
    pub dropped: usize,
    /// `(1-based data row, reason)` for each dropped row.
    pub drop_reasons: Vec<(usize, String)>,
}

fn open(path: &Path) -> Result<File, DataError> {
    File::open(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_labeled_csv(path: impl AsRef<Path>, columns: &ColumnMap) -> Result<LoadReport<LabeledRecord>, DataError> {
    read_labeled_csv(open(path.as_ref())?, columns)
}

pub fn read_labeled_csv<R: Read>(reader: R, columns: &ColumnMap) -> Result<LoadReport<LabeledRecord>, DataError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let smiles_col = find(&columns.smiles).ok_or_else(|| DataError::MissingColumn(columns.smiles.clone()))?;
    let label_col = find(&columns.label).ok_or_else(|| DataError::MissingColumn(columns.label.clone()))?;
    let split_col = columns.split.as_deref().and_then(find);

    let mut report = LoadReport {
        records: Vec::new(),
        dropped: 0,
        drop_reasons: Vec::new(),
    };
    for (row, result) in rdr.records().enumerate() {
        let rec = result?;
        let smiles = rec.get(smiles_col).unwrap_or("").to_string();
        let parsed = (|| -> Result<LabeledRecord, String> {
            let graph = parse_smiles(&smiles).map_err(|e| e.to_string())?;
            let raw = rec.get(label_col).unwrap_or("");
            let y: f64 = raw.parse().map_err(|_| format!("bad label `{raw}`"))?;
            if !y.is_finite() {
                return Err(format!("non-finite label `{raw}`"));
            }
            let split = match split_col.and_then(|c| rec.get(c)) {
                None | Some("") => None,
                Some(tag) => Some(tag.parse::<SplitTag>()?),
            };
            Ok(LabeledRecord {
                smiles: smiles.clone(),
                graph,
                y,
                split,
                cliff_flag: false,
            })
        })();
        match parsed {
            Ok(r) => report.records.push(r),
            Err(reason) => {
                warn!("dropping row {}: {reason}", row + 1);
                report.dropped += 1;
                report.drop_reasons.push((row + 1, reason));
            }
        }
    }
    Ok(report)
}

pub fn load_unlabeled(path: impl AsRef<Path>) -> Result<LoadReport<UnlabeledRecord>, DataError> {
    read_unlabeled(open(path.as_ref())?)
}

/// One SMILES per line; blank lines and `#` comments are skipped. Anything
/// after the first whitespace (a name or id column) is ignored.
pub fn read_unlabeled<R: Read>(reader: R) -> Result<LoadReport<UnlabeledRecord>, DataError> {
    let mut report = LoadReport {
        records: Vec::new(),
        dropped: 0,
        drop_reasons: Vec::new(),
    };
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|source| DataError::Io {
            path: "<unlabeled pool>".into(),
            source,
        })?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let smiles = line.split_whitespace().next().unwrap();
        match parse_smiles(smiles) {
            Ok(graph) => report.records.push(UnlabeledRecord {
                smiles: smiles.to_string(),
                graph,
            }),
            Err(e) => {
                warn!("dropping pool line {}: {e}", i + 1);
                report.dropped += 1;
                report.drop_reasons.push((i + 1, e.to_string()));
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn malformed_row_is_dropped_and_counted() {
        let csv = "smiles,label\nCCO,1.0\nC(,2.0\nc1ccccc1,-2.50\n";
        let r = read_labeled_csv(csv.as_bytes(), &ColumnMap::default()).unwrap();
        assert_eq!(r.records.len(), 2);
        assert_eq!(r.dropped, 1);
        assert_eq!(r.records[1].y, -2.5);
        assert_eq!(r.drop_reasons[0].0, 2);
    }

    #[test]
    fn duplicates_are_kept() {
        let csv = "smiles,label\nCCO,1\nCCO,1\n";
        let r = read_labeled_csv(csv.as_bytes(), &ColumnMap::default()).unwrap();
        assert_eq!(r.records.len(), 2);
    }

    #[test]
    fn missing_column_is_an_error() {
        let csv = "smi,label\nCCO,1\n";
        let err = read_labeled_csv(csv.as_bytes(), &ColumnMap::default()).unwrap_err();
        assert!(matches!(err, DataError::MissingColumn(c) if c == "smiles"));
    }

    #[test]
    fn split_tags_are_read() {
        let csv = "smiles,label,split\nCCO,1,train\nCCN,2,test\nCCC,3,\n";
        let r = read_labeled_csv(csv.as_bytes(), &ColumnMap::default()).unwrap();
        let tags: Vec<_> = r.records.iter().map(|r| r.split).collect();
        assert_eq!(tags, vec![Some(SplitTag::Train), Some(SplitTag::Test), None]);
    }

    #[test]
    fn unlabeled_skips_comments_and_names() {
        let text = "# library dump\nCCO ethanol\n\nC(\nc1ccccc1\n";
        let r = read_unlabeled(text.as_bytes()).unwrap();
        assert_eq!(r.records.len(), 2);
        assert_eq!(r.records[0].smiles, "CCO");
        assert_eq!(r.dropped, 1);
    }
}

//! Dataset ingestion, splits, activity-cliff detection, metrics and
//! synthetic molecular tasks.

pub mod cliffs;
pub mod error;
pub mod load;
pub mod metrics;
pub mod records;
pub mod split;
pub mod synthetic;

pub use cliffs::{cliff_pairs_by, detect_cliffs, pair_similarity, CliffPair, CliffThresholds};
pub use error::{DataError, MetricError};
pub use load::{load_labeled_csv, load_unlabeled, read_labeled_csv, read_unlabeled, ColumnMap, LoadReport};
pub use metrics::{cliff_mae, cliff_rmse, cliff_roc_auc, mae, rmse, roc_auc};
pub use records::{LabeledRecord, SplitTag, UnlabeledRecord};
pub use split::{split, Partition, Ratios, Stratify};
pub use synthetic::{count_motif, motif_regression, random_molecule, GeneratorConfig, Motif, SyntheticSample};

/// 1000 SMILES (one per line, name after a space): known drugs and reagents
/// followed by generated molecules. Two salts with unsupported elements are
/// included on purpose.
pub const DESK_CORPUS: &str = include_str!("../data/desk_corpus.smi");

/// Small labeled CSV (`smiles,label`; amide count plus noise).
pub const FIXTURE_LABELED: &str = include_str!("../data/fixture_labeled.csv");

/// Unlabeled SMILES matching [`FIXTURE_LABELED`]'s distribution.
pub const FIXTURE_POOL: &str = include_str!("../data/fixture_pool.smi");

//! Library side of the `semimol` command: experiment configs, run
//! directories and the reports built from them.

pub mod cliffs;
pub mod compare;
pub mod config;
pub mod error;
pub mod inspect;
pub mod run;
pub mod selftest;

pub use cliffs::{cmd_cliffs, CliffReport};
pub use compare::{cmd_compare, median, Comparison};
pub use config::{apply_override, Backbone, ExperimentConfig, PoolingKind};
pub use error::{CliError, Result};
pub use inspect::{cmd_pseudo_inspect, dumped_epochs, write_inspect_csv};
pub use run::{cmd_train, prepare, read_log, read_metrics, run_dir, DumpRow, Metrics, Scores};

/// Environment variable naming the default run root.
pub const RUN_ROOT_ENV: &str = "SEMIMOL_RUN_ROOT";

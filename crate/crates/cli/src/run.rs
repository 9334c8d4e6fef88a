//! `train`: load data, split, detect cliffs, run a strategy and write the
//! run directory.
//!
//! Run directory layout:
//! - `config.toml`: resolved config; rerunning it reproduces the run
//! - `run_log.csv`: one row per main-loop epoch
//! - `metrics.json`: validation and test scores, overall and on cliffs
//! - `f.ckpt`, `g.ckpt`: best checkpoints (`g.ckpt` for instructor strategies)
//! - `pseudo_epoch_{n}.csv`: pseudo pool at each dumped epoch

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use datasets::{detect_cliffs, load_labeled_csv, load_unlabeled, split, ColumnMap, LabeledRecord, Ratios, Stratify};
use models::{save_checkpoint, MolInput, TargetModel};
use ndcore::sigmoid;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use semisup::{EpochLog, LabeledSet, Metric, PseudoDump, RunOutput, Strategy, Task, TrainData, TrainError};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

/// Scores of one split. Absent values are `null` so that the key set is
/// the same for every run of a task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub n: usize,
    pub n_cliff: usize,
    pub rmse: Option<f64>,
    pub mae: Option<f64>,
    pub cliff_rmse: Option<f64>,
    pub cliff_mae: Option<f64>,
    pub roc_auc: Option<f64>,
    pub cliff_roc_auc: Option<f64>,
}

/// Contents of `metrics.json`. The top-level `rmse` / `cliff_rmse` (or
/// `roc_auc` / `cliff_roc_auc`) are test-set scores of the best checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub strategy: Strategy,
    pub task: Task,
    pub metric: Metric,
    pub seed: u64,
    pub rmse: Option<f64>,
    pub cliff_rmse: Option<f64>,
    pub roc_auc: Option<f64>,
    pub cliff_roc_auc: Option<f64>,
    pub gamma_final: Option<f64>,
    pub best_epoch: Option<usize>,
    pub warmup_val: f64,
    pub best_val: f64,
    pub n_train: usize,
    pub n_pool: usize,
    pub dropped_rows: usize,
    pub val: Scores,
    pub test: Option<Scores>,
}

impl Metrics {
    /// Overall and cliff test score under the configured metric.
    pub fn headline(&self) -> (Option<f64>, Option<f64>) {
        match self.metric {
            Metric::Rmse => (self.rmse, self.cliff_rmse),
            Metric::Mae => (
                self.test.as_ref().and_then(|t| t.mae),
                self.test.as_ref().and_then(|t| t.cliff_mae),
            ),
            Metric::RocAuc => (self.roc_auc, self.cliff_roc_auc),
        }
    }
}

/// One row of `pseudo_epoch_{n}.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpRow {
    /// Position in the capped pool.
    pub sample_id: usize,
    /// Line of the molecule among the parsed pool records.
    pub pool_index: usize,
    pub smiles: String,
    pub y_hat: f64,
    pub p: f64,
    pub admitted: bool,
    pub epoch_assigned: usize,
    /// Threshold in force at this epoch.
    pub gamma: Option<f64>,
}

/// Featurized data of one run, split and cliff-flagged.
pub struct Prepared {
    pub data: TrainData,
    pub pool_smiles: Vec<String>,
    pub dropped_rows: usize,
}

fn to_set(records: &[&LabeledRecord], radius: usize, width: usize) -> LabeledSet {
    LabeledSet {
        inputs: records.iter().map(|r| MolInput::new(&r.graph, radius, width)).collect(),
        y: records.iter().map(|r| r.y).collect(),
        cliff: records.iter().map(|r| r.cliff_flag).collect(),
    }
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    let d = &cfg.data;
    let columns = ColumnMap {
        smiles: d.smiles_column.clone(),
        label: d.label_column.clone(),
        split: d.split_column.clone(),
    };
    let report = load_labeled_csv(&d.labeled, &columns)?;
    let mut records = report.records;
    if records.is_empty() {
        return Err(CliError::Data(format!("{}: no usable rows", d.labeled.display())));
    }
    if cfg.train.task == Task::Classification {
        if let Some(r) = records.iter().find(|r| r.y != 0.0 && r.y != 1.0) {
            return Err(CliError::Data(format!(
                "classification label {} for {} is not 0 or 1",
                r.y, r.smiles
            )));
        }
    }
    detect_cliffs(&mut records, cfg.cliffs.thresholds(), d.fp_radius, d.fp_width);

    let ratios = Ratios::new(d.train_fraction, d.val_fraction, d.test_fraction)?;
    let stratify = match cfg.train.task {
        Task::Regression => Stratify::Quantiles(d.stratify_bins),
        Task::Classification => Stratify::Classes,
    };
    let part = split(&records, ratios, stratify, &mut ChaCha8Rng::seed_from_u64(d.split_seed))?;
    let pick = |idx: &[usize]| -> Vec<&LabeledRecord> { idx.iter().map(|&i| &records[i]).collect() };
    let train = to_set(&pick(&part.train), d.fp_radius, d.fp_width);
    let val = to_set(&pick(&part.val), d.fp_radius, d.fp_width);
    let test = (!part.test.is_empty()).then(|| to_set(&pick(&part.test), d.fp_radius, d.fp_width));

    let (pool, pool_smiles) = match &d.pool {
        Some(path) => {
            let pool = load_unlabeled(path)?.records;
            let inputs = pool
                .iter()
                .map(|r| MolInput::new(&r.graph, d.fp_radius, d.fp_width))
                .collect();
            (inputs, pool.into_iter().map(|r| r.smiles).collect())
        }
        None => (Vec::new(), Vec::new()),
    };
    Ok(Prepared {
        data: TrainData { train, val, test, pool },
        pool_smiles,
        dropped_rows: report.dropped,
    })
}

fn opt(r: std::result::Result<f64, datasets::MetricError>) -> Option<f64> {
    r.ok().filter(|v| v.is_finite())
}

pub fn score(f: &TargetModel, set: &LabeledSet, task: Task) -> Result<Scores> {
    let out = f.predict(&set.refs()).map_err(TrainError::from)?;
    let n_cliff = set.cliff.iter().filter(|&&c| c).count();
    let mut s = Scores {
        n: set.len(),
        n_cliff,
        rmse: None,
        mae: None,
        cliff_rmse: None,
        cliff_mae: None,
        roc_auc: None,
        cliff_roc_auc: None,
    };
    match task {
        Task::Regression => {
            s.rmse = opt(datasets::rmse(&out, &set.y));
            s.mae = opt(datasets::mae(&out, &set.y));
            s.cliff_rmse = opt(datasets::cliff_rmse(&out, &set.y, &set.cliff));
            s.cliff_mae = opt(datasets::cliff_mae(&out, &set.y, &set.cliff));
        }
        Task::Classification => {
            let p: Vec<f64> = out.iter().map(|&z| sigmoid(z)).collect();
            let labels: Vec<bool> = set.y.iter().map(|&y| y >= 0.5).collect();
            s.roc_auc = opt(datasets::roc_auc(&p, &labels));
            s.cliff_roc_auc = opt(datasets::cliff_roc_auc(&p, &labels, &set.cliff));
        }
    }
    Ok(s)
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(CliError::io(path))
}

pub fn write_log(path: &Path, log: &[EpochLog]) -> Result<()> {
    // explicit header so that an empty (aborted) log still has one
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record([
        "epoch",
        "gamma",
        "hybrid_size",
        "loss_f",
        "loss_g",
        "val_metric",
        "test_metric",
        "wall_ms",
    ])
    .and_then(|_| log.iter().try_for_each(|row| w.serialize(row)))
    .map_err(|e| CliError::Data(e.to_string()))?;
    let bytes = w.into_inner().map_err(|e| CliError::Data(e.to_string()))?;
    write_file(path, &bytes)
}

pub fn read_log(path: &Path) -> Result<Vec<EpochLog>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn dump_rows(dump: &PseudoDump, out: &RunOutput, pool_smiles: &[String]) -> Vec<DumpRow> {
    dump.samples
        .iter()
        .zip(&dump.admitted)
        .map(|(s, &admitted)| {
            let pool_index = out.pool_indices[s.index];
            DumpRow {
                sample_id: s.index,
                pool_index,
                smiles: pool_smiles[pool_index].clone(),
                y_hat: s.y_hat,
                p: s.p,
                admitted,
                epoch_assigned: s.epoch_assigned,
                gamma: dump.gamma,
            }
        })
        .collect()
}

pub fn dump_path(dir: &Path, epoch: usize) -> PathBuf {
    dir.join(format!("pseudo_epoch_{epoch}.csv"))
}

fn write_dump(path: &Path, rows: &[DumpRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    for row in rows {
        w.serialize(row).map_err(|e| CliError::Data(e.to_string()))?;
    }
    w.flush().map_err(CliError::io(path))
}

/// Where `cmd_train` puts a run: `root/<run name>`.
pub fn run_dir(cfg: &ExperimentConfig, root: &Path) -> PathBuf {
    root.join(cfg.run_name())
}

/// Runs the configured strategy and writes the run directory `dir`.
/// On a non-finite loss the partial log is kept and a numeric error is
/// returned.
pub fn cmd_train(cfg: &ExperimentConfig, dir: &Path) -> Result<Metrics> {
    cfg.validate()?;
    fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    write_file(&dir.join("config.toml"), cfg.to_toml().as_bytes())?;

    let prepared = prepare(cfg)?;
    let data = &prepared.data;
    log::info!(
        "{}: {} train / {} val / {} test, {} unlabeled",
        cfg.strategy,
        data.train.len(),
        data.val.len(),
        data.test.as_ref().map_or(0, |t| t.len()),
        data.pool.len()
    );
    let out = match semisup::train(cfg.strategy, cfg.target_spec(), cfg.instructor_spec(), data, &cfg.train) {
        Ok(out) => out,
        Err(TrainError::NonFiniteLoss { phase, epoch, log }) => {
            write_log(&dir.join("run_log.csv"), &log)?;
            return Err(CliError::Numeric(format!("non-finite {phase} loss at epoch {epoch}")));
        }
        Err(e) => return Err(e.into()),
    };

    write_log(&dir.join("run_log.csv"), &out.log)?;
    save_checkpoint(dir.join("f.ckpt"), &out.f.layout_tag(), out.f.params())
        .map_err(|e| CliError::Data(e.to_string()))?;
    if let (true, Some(g)) = (cfg.strategy.uses_instructor(), &out.g) {
        save_checkpoint(dir.join("g.ckpt"), &g.layout_tag(), g.params()).map_err(|e| CliError::Data(e.to_string()))?;
    }
    for dump in &out.dumps {
        write_dump(
            &dump_path(dir, dump.epoch),
            &dump_rows(dump, &out, &prepared.pool_smiles),
        )?;
    }

    let task = cfg.train.task;
    let val = score(&out.f, &data.val, task)?;
    let test = data.test.as_ref().map(|t| score(&out.f, t, task)).transpose()?;
    let metrics = Metrics {
        strategy: cfg.strategy,
        task,
        metric: cfg.train.metric,
        seed: cfg.train.seed,
        rmse: test.as_ref().and_then(|t| t.rmse),
        cliff_rmse: test.as_ref().and_then(|t| t.cliff_rmse),
        roc_auc: test.as_ref().and_then(|t| t.roc_auc),
        cliff_roc_auc: test.as_ref().and_then(|t| t.cliff_roc_auc),
        gamma_final: out.gamma_final,
        best_epoch: out.best_epoch,
        warmup_val: out.warmup_val,
        best_val: out.best_val,
        n_train: data.train.len(),
        n_pool: out.pool_indices.len(),
        dropped_rows: prepared.dropped_rows,
        val,
        test,
    };
    let mut json = serde_json::to_vec_pretty(&metrics).expect("metrics serialize");
    json.write_all(b"\n").expect("write to vec");
    write_file(&dir.join("metrics.json"), &json)?;
    Ok(metrics)
}

pub fn read_metrics(dir: &Path) -> Result<Metrics> {
    let path = dir.join("metrics.json");
    let text = fs::read_to_string(&path).map_err(|_| CliError::MissingMetrics(dir.to_path_buf()))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

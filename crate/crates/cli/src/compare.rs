use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use semisup::{Metric, Strategy, Task};

use crate::error::{CliError, Result};
use crate::run::read_metrics;

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub run: String,
    pub strategy: Strategy,
    pub seed: u64,
    pub metric: Metric,
    pub overall: Option<f64>,
    pub cliff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MedianRow {
    pub strategy: Strategy,
    pub runs: usize,
    pub overall: Option<f64>,
    pub cliff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub task: Task,
    pub rows: Vec<CompareRow>,
    /// One row per strategy, in order of first appearance.
    pub medians: Vec<MedianRow>,
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    })
}

fn run_name(dir: &Path) -> String {
    dir.file_name()
        .map_or_else(|| dir.display().to_string(), |n| n.to_string_lossy().into_owned())
}

/// Test scores of completed runs side by side, with per-strategy medians.
pub fn cmd_compare(dirs: &[PathBuf]) -> Result<Comparison> {
    if dirs.len() < 2 {
        return Err(CliError::Data("compare needs at least two run directories".into()));
    }
    let mut task = None;
    let mut rows = Vec::with_capacity(dirs.len());
    for dir in dirs {
        let m = read_metrics(dir)?;
        match task {
            None => task = Some(m.task),
            Some(t) if t != m.task => {
                return Err(CliError::MixedTasks(format!(
                    "{} is {:?}, earlier runs are {t:?}",
                    dir.display(),
                    m.task
                )));
            }
            _ => {}
        }
        let (overall, cliff) = m.headline();
        rows.push(CompareRow {
            run: run_name(dir),
            strategy: m.strategy,
            seed: m.seed,
            metric: m.metric,
            overall,
            cliff,
        });
    }
    let mut strategies: Vec<Strategy> = Vec::new();
    for r in &rows {
        if !strategies.contains(&r.strategy) {
            strategies.push(r.strategy);
        }
    }
    let medians = strategies
        .into_iter()
        .map(|s| {
            let of = |pick: fn(&CompareRow) -> Option<f64>| {
                median(
                    &rows
                        .iter()
                        .filter(|r| r.strategy == s)
                        .filter_map(pick)
                        .collect::<Vec<_>>(),
                )
            };
            MedianRow {
                strategy: s,
                runs: rows.iter().filter(|r| r.strategy == s).count(),
                overall: of(|r| r.overall),
                cliff: of(|r| r.cliff),
            }
        })
        .collect();
    Ok(Comparison {
        task: task.expect("at least two runs"),
        rows,
        medians,
    })
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.4}"))
}

fn raw(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

impl Comparison {
    pub fn to_text(&self) -> String {
        let width = self.rows.iter().map(|r| r.run.len()).max().unwrap_or(3).max(3);
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<width$}  {:<16} {:>5}  {:<8} {:>9} {:>9}",
            "run", "strategy", "seed", "metric", "overall", "cliff"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<width$}  {:<16} {:>5}  {:<8} {:>9} {:>9}",
                r.run,
                r.strategy.name(),
                r.seed,
                format!("{:?}", r.metric).to_lowercase(),
                cell(r.overall),
                cell(r.cliff)
            );
        }
        let _ = writeln!(s, "\nmedians");
        for m in &self.medians {
            let _ = writeln!(
                s,
                "  {:<16} n={:<3} {:>9} {:>9}",
                m.strategy.name(),
                m.runs,
                cell(m.overall),
                cell(m.cliff)
            );
        }
        s
    }

    /// `kind,name,strategy,seed,overall,cliff` with `kind` = run | median.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        let err = |e: csv::Error| CliError::Data(e.to_string());
        w.write_record(["kind", "name", "strategy", "seed", "overall", "cliff"])
            .map_err(err)?;
        for r in &self.rows {
            w.write_record([
                "run",
                &r.run,
                r.strategy.name(),
                &r.seed.to_string(),
                &raw(r.overall),
                &raw(r.cliff),
            ])
            .map_err(err)?;
        }
        for m in &self.medians {
            w.write_record([
                "median",
                m.strategy.name(),
                m.strategy.name(),
                "",
                &raw(m.overall),
                &raw(m.cliff),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| CliError::Data(e.to_string()))
    }
}

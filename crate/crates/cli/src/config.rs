//! Experiment configuration: one TOML file plus `key=value` overrides.
//!
//! ```toml
//! strategy = "semimol"
//!
//! [data]
//! labeled = "train.csv"      # smiles,label[,split]
//! pool = "pool.smi"          # optional, one SMILES per line
//!
//! [model]
//! backbone = "gin"
//! hidden = 64
//!
//! [train]
//! gamma = 0.9
//! k = 5
//! ```
//!
//! Relative data paths are resolved against the directory of the config
//! file, so a run directory's `config.toml` snapshot can be rerun from
//! anywhere.

use std::path::{Path, PathBuf};

use models::{EncoderSpec, InstructorSpec, Pooling, TargetSpec};
use semisup::{Strategy, TrainConfig};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backbone {
    Gin,
    FingerprintMlp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolingKind {
    Sum,
    Mean,
    Attention,
}

impl From<PoolingKind> for Pooling {
    fn from(p: PoolingKind) -> Self {
        match p {
            PoolingKind::Sum => Pooling::Sum,
            PoolingKind::Mean => Pooling::Mean,
            PoolingKind::Attention => Pooling::Attention,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub labeled: PathBuf,
    pub pool: Option<PathBuf>,
    pub smiles_column: String,
    pub label_column: String,
    /// Used only when every row carries a tag.
    pub split_column: Option<String>,
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub test_fraction: f64,
    /// Label-quantile bins for stratified regression splits.
    pub stratify_bins: usize,
    pub split_seed: u64,
    pub fp_radius: usize,
    pub fp_width: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            labeled: PathBuf::from("labeled.csv"),
            pool: None,
            smiles_column: "smiles".into(),
            label_column: "label".into(),
            split_column: Some("split".into()),
            train_fraction: 0.8,
            val_fraction: 0.1,
            test_fraction: 0.1,
            stratify_bins: 5,
            split_seed: 0,
            fp_radius: 2,
            fp_width: 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub backbone: Backbone,
    pub hidden: usize,
    /// GIN layers, or hidden layers of the fingerprint MLP.
    pub layers: usize,
    pub pooling: PoolingKind,
    pub fc_layers: usize,
    pub dropout: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            backbone: Backbone::Gin,
            hidden: 64,
            layers: 3,
            pooling: PoolingKind::Attention,
            fc_layers: 2,
            dropout: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InstructorConfig {
    pub backbone: Backbone,
    pub hidden: usize,
    pub layers: usize,
    pub pooling: PoolingKind,
    pub fusion_hidden: usize,
    pub fusion_layers: usize,
    pub dropout: f64,
}

impl Default for InstructorConfig {
    fn default() -> Self {
        InstructorConfig {
            backbone: Backbone::FingerprintMlp,
            hidden: 64,
            layers: 1,
            pooling: PoolingKind::Sum,
            fusion_hidden: 32,
            fusion_layers: 2,
            dropout: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CliffConfig {
    pub similarity: f64,
    pub potency: f64,
}

impl Default for CliffConfig {
    fn default() -> Self {
        let t = datasets::CliffThresholds::default();
        CliffConfig {
            similarity: t.similarity,
            potency: t.potency,
        }
    }
}

impl CliffConfig {
    pub fn thresholds(&self) -> datasets::CliffThresholds {
        datasets::CliffThresholds {
            similarity: self.similarity,
            potency: self.potency,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Run directory name under the run root; derived from strategy and
    /// seed when absent.
    pub name: Option<String>,
    pub strategy: Strategy,
    pub data: DataConfig,
    pub model: ModelConfig,
    pub instructor: InstructorConfig,
    pub train: TrainConfig,
    pub cliffs: CliffConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            name: None,
            strategy: Strategy::Semimol,
            data: DataConfig::default(),
            model: ModelConfig::default(),
            instructor: InstructorConfig::default(),
            train: TrainConfig::default(),
            cliffs: CliffConfig::default(),
        }
    }
}

fn parse_value(raw: &str) -> Value {
    match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.into())),
        Err(_) => Value::String(raw.into()),
    }
}

/// Sets `a.b.c = value` in `doc`. The value is read as a TOML literal and
/// falls back to a plain string.
pub fn apply_override(doc: &mut Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{assignment}` is not key=value")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("override key `{key}` is malformed")));
    }
    let (last, parents) = parts.split_last().expect("split yields one part");
    let mut table = doc;
    for (depth, part) in parents.iter().enumerate() {
        table = table
            .entry(part.to_string())
            .or_insert_with(|| Value::Table(Table::new()))
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("`{}` is not a table", parts[..=depth].join("."))))?;
    }
    table.insert(last.to_string(), parse_value(raw.trim()));
    Ok(())
}

fn absolute(base: &Path, p: &Path) -> PathBuf {
    let joined = if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
    std::path::absolute(&joined).unwrap_or(joined)
}

impl ExperimentConfig {
    /// Parses TOML text, applies overrides and validates. Relative data
    /// paths are resolved against `base`.
    pub fn from_toml(text: &str, overrides: &[String], base: &Path) -> Result<Self> {
        let mut doc: Table = text
            .parse()
            .map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let mut cfg: ExperimentConfig = serde_path_to_error::deserialize(Value::Table(doc))
            .map_err(|e| CliError::Config(format!("{}: {}", e.path(), e.inner().message())))?;
        cfg.data.labeled = absolute(base, &cfg.data.labeled);
        cfg.data.pool = cfg.data.pool.as_deref().map(|p| absolute(base, p));
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, overrides, base)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// Directory name of the run under the run root.
    pub fn run_name(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| format!("{}_seed{}", self.strategy, self.train.seed))
    }

    pub fn target_spec(&self) -> TargetSpec {
        let m = &self.model;
        TargetSpec {
            encoder: encoder(m.backbone, m.hidden, m.layers, m.pooling, self.data.fp_width),
            fc_layers: m.fc_layers,
            dropout: m.dropout,
        }
    }

    pub fn instructor_spec(&self) -> InstructorSpec {
        let g = &self.instructor;
        InstructorSpec {
            encoder: encoder(g.backbone, g.hidden, g.layers, g.pooling, self.data.fp_width),
            fusion_hidden: g.fusion_hidden,
            fusion_layers: g.fusion_layers,
            dropout: g.dropout,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: &str| Err(CliError::Config(format!("{field}: {msg}")));
        self.train
            .validate()
            .map_err(|e| CliError::Config(format!("train: {e}")))?;
        let d = &self.data;
        datasets::Ratios::new(d.train_fraction, d.val_fraction, d.test_fraction)
            .map_err(|e| CliError::Config(format!("data.*_fraction: {e}")))?;
        if d.val_fraction <= 0.0 {
            return bad("data.val_fraction", "the curriculum needs a validation split");
        }
        if d.fp_width == 0 {
            return bad("data.fp_width", "must be at least 1");
        }
        for (prefix, hidden, layers, dropout) in [
            ("model", self.model.hidden, self.model.layers, self.model.dropout),
            (
                "instructor",
                self.instructor.hidden,
                self.instructor.layers,
                self.instructor.dropout,
            ),
        ] {
            if hidden == 0 {
                return bad(&format!("{prefix}.hidden"), "must be at least 1");
            }
            if layers == 0 {
                return bad(&format!("{prefix}.layers"), "must be at least 1");
            }
            if !(0.0..1.0).contains(&dropout) {
                return bad(&format!("{prefix}.dropout"), "must lie in [0, 1)");
            }
        }
        if self.model.fc_layers == 0 {
            return bad("model.fc_layers", "must be at least 1");
        }
        if self.instructor.fusion_hidden == 0 || self.instructor.fusion_layers == 0 {
            return bad("instructor.fusion_*", "fusion layers and width must be at least 1");
        }
        if self.strategy == Strategy::PiModel && self.model.dropout == 0.0 {
            return bad("model.dropout", "pi_model needs a dropout rate above 0");
        }
        if !(self.cliffs.similarity > 0.0 && self.cliffs.similarity <= 1.0) {
            return bad("cliffs.similarity", "must lie in (0, 1]");
        }
        if !(self.cliffs.potency > 0.0 && self.cliffs.potency.is_finite()) {
            return bad("cliffs.potency", "must be positive");
        }
        self.target_spec()
            .validate()
            .map_err(|e| CliError::Config(format!("model: {e}")))?;
        self.instructor_spec()
            .validate()
            .map_err(|e| CliError::Config(format!("instructor: {e}")))?;
        Ok(())
    }
}

fn encoder(backbone: Backbone, hidden: usize, layers: usize, pooling: PoolingKind, width: usize) -> EncoderSpec {
    match backbone {
        Backbone::Gin => EncoderSpec::Gin {
            hidden,
            layers,
            pooling: pooling.into(),
        },
        Backbone::FingerprintMlp => EncoderSpec::FingerprintMlp { width, hidden, layers },
    }
}

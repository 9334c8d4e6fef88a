use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use chemgraph::{morgan_fingerprint, parse_smiles, string_similarity, tanimoto};
use cli::{cmd_cliffs, cmd_compare, cmd_pseudo_inspect, cmd_train, read_log, read_metrics, CliError, ExperimentConfig};
use datasets::{CliffThresholds, ColumnMap};

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../datasets/data")
}

const BASE: &str = r#"
strategy = "semimol"
[data]
labeled = "LABELED"
pool = "POOL"
train_fraction = 0.6
val_fraction = 0.2
test_fraction = 0.2
fp_width = 128
[model]
hidden = 8
layers = 2
pooling = "sum"
dropout = 0.1
[instructor]
hidden = 8
[train]
lr_f = 0.01
lr_g = 0.01
batch_size = 16
epochs = 4
warmup_epochs_f = 10
warmup_epochs_g = 2
gamma = 0.6
delta_gamma = 0.1
k = 2
dump_epochs = [0, 3]
"#;

fn config(labeled: &Path, overrides: &[&str]) -> ExperimentConfig {
    let text = BASE
        .replace("LABELED", &labeled.display().to_string())
        .replace("POOL", &data_dir().join("fixture_pool.smi").display().to_string());
    let o: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    ExperimentConfig::from_toml(&text, &o, Path::new("/")).unwrap()
}

fn fixture(overrides: &[&str]) -> ExperimentConfig {
    config(&data_dir().join("fixture_labeled.csv"), overrides)
}

fn classification_csv(dir: &Path) -> PathBuf {
    let text = fs::read_to_string(data_dir().join("fixture_labeled.csv")).unwrap();
    let mut out = String::from("smiles,label\n");
    for line in text.lines().skip(1) {
        let (s, y) = line.split_once(',').unwrap();
        let y: f64 = y.parse().unwrap();
        out.push_str(&format!("{s},{}\n", u8::from(y > 0.3)));
    }
    let path = dir.join("classes.csv");
    fs::write(&path, out).unwrap();
    path
}

#[test]
fn supervised_run_writes_a_complete_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("run");
    let cfg = fixture(&["strategy=supervised", "train.epochs=2"]);
    cmd_train(&cfg, &dir).unwrap();
    assert_eq!(read_log(&dir.join("run_log.csv")).unwrap().len(), 2);
    for f in ["config.toml", "metrics.json", "f.ckpt"] {
        assert!(dir.join(f).exists(), "{f}");
    }
    assert!(!dir.join("g.ckpt").exists());
    let snapshot = ExperimentConfig::load(&dir.join("config.toml"), &[]).unwrap();
    assert_eq!(snapshot, cfg);
}

#[test]
fn semimol_metrics_have_the_documented_keys() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("run");
    cmd_train(&fixture(&[]), &dir).unwrap();
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("metrics.json")).unwrap()).unwrap();
    for key in ["rmse", "cliff_rmse", "gamma_final", "val", "test"] {
        assert!(json.get(key).is_some(), "{key}");
    }
    assert!(json["rmse"].as_f64().unwrap() > 0.0);
    assert!(dir.join("g.ckpt").exists());
}

#[test]
fn repeated_runs_and_snapshot_reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    let cfg = fixture(&["train.seed=3"]);
    cmd_train(&cfg, &a).unwrap();
    cmd_train(&cfg, &b).unwrap();
    cmd_train(&ExperimentConfig::load(&a.join("config.toml"), &[]).unwrap(), &c).unwrap();
    for f in ["run_log.csv", "metrics.json", "pseudo_epoch_3.csv", "f.ckpt", "g.ckpt"] {
        let first = fs::read(a.join(f)).unwrap();
        assert_eq!(first, fs::read(b.join(f)).unwrap(), "{f}");
        assert_eq!(first, fs::read(c.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn pseudo_dumps_replay_the_admission_rule() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("run");
    cmd_train(&fixture(&["train.pool_cap=120"]), &dir).unwrap();
    let log = read_log(&dir.join("run_log.csv")).unwrap();
    for epoch in [0, 3] {
        let rows = cmd_pseudo_inspect(&dir, epoch).unwrap();
        assert_eq!(rows.len(), 120);
        let gamma = log[epoch].gamma.unwrap();
        assert!(rows
            .iter()
            .all(|r| r.admitted == (r.p >= gamma) && r.gamma == Some(gamma)));
        assert_eq!(log[epoch].hybrid_size, 48 + rows.iter().filter(|r| r.admitted).count());
    }
    match cmd_pseudo_inspect(&dir, 1) {
        Err(CliError::EpochNotDumped { epoch: 1, available }) => assert_eq!(available, vec![0, 3]),
        other => panic!("expected EpochNotDumped, got {other:?}"),
    }
}

#[test]
fn compare_tabulates_runs_and_medians() {
    let tmp = tempfile::tempdir().unwrap();
    let mut dirs = Vec::new();
    for (name, overrides) in [
        ("s0", vec!["strategy=supervised"]),
        ("s1", vec!["strategy=supervised", "train.seed=1"]),
    ] {
        let dir = tmp.path().join(name);
        cmd_train(&fixture(&overrides), &dir).unwrap();
        dirs.push(dir);
    }
    let c = cmd_compare(&dirs).unwrap();
    assert_eq!(c.rows.len(), 2);
    assert_eq!(c.medians.len(), 1);
    let overall: Vec<f64> = c.rows.iter().map(|r| r.overall.unwrap()).collect();
    assert_eq!(c.medians[0].overall, Some(0.5 * (overall[0] + overall[1])));
    let text = c.to_text();
    assert!(text.contains("s0") && text.contains("s1") && text.contains("medians"));
    let mut csv = Vec::new();
    c.write_csv(&mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 4);

    let cls = tmp.path().join("cls");
    let labeled = classification_csv(tmp.path());
    cmd_train(
        &config(
            &labeled,
            &[
                "strategy=supervised",
                "train.task=classification",
                "train.metric=roc_auc",
            ],
        ),
        &cls,
    )
    .unwrap();
    assert!(read_metrics(&cls).unwrap().roc_auc.is_some());
    assert!(matches!(
        cmd_compare(&[dirs[0].clone(), cls]),
        Err(CliError::MixedTasks(_))
    ));
    assert!(matches!(
        cmd_compare(&[dirs[0].clone(), tmp.path().join("none")]),
        Err(CliError::MissingMetrics(_))
    ));
}

#[test]
fn cliff_report_matches_enumeration() {
    let tmp = tempfile::tempdir().unwrap();
    let smiles = ["CCO", "CCN", "CCCO", "c1ccccc1O", "c1ccccc1N", "CCO"];
    let y: [f64; 6] = [1.0, 2.5, 1.2, 0.0, 3.0, 1.1];
    let path = tmp.path().join("toy.csv");
    let mut text = String::from("smiles,label\n");
    for (s, v) in smiles.iter().zip(y) {
        text.push_str(&format!("{s},{v}\n"));
    }
    fs::write(&path, &text).unwrap();
    let t = CliffThresholds {
        similarity: 0.5,
        potency: 1.0,
    };
    let report = cmd_cliffs(&path, &ColumnMap::default(), t, 2, 512).unwrap();
    let fps: Vec<_> = smiles
        .iter()
        .map(|s| morgan_fingerprint(&parse_smiles(s).unwrap(), 2, 512))
        .collect();
    let mut want = Vec::new();
    for i in 0..smiles.len() {
        for j in i + 1..smiles.len() {
            let sim = tanimoto(&fps[i], &fps[j])
                .unwrap()
                .max(string_similarity(smiles[i], smiles[j]));
            if sim >= 0.5 && (y[i] - y[j]).abs() >= 1.0 {
                want.push((i, j));
            }
        }
    }
    let got: Vec<(usize, usize)> = report.pairs.iter().map(|p| (p.i, p.j)).collect();
    assert_eq!(got, want);
    assert!(!want.is_empty());
    assert!(report.summary().starts_with("# similarity >= 0.5, |delta| >= 1"));

    let flat = tmp.path().join("flat.csv");
    fs::write(&flat, "smiles,label\nCCO,1\nCCN,1\nCCO,1\n").unwrap();
    let report = cmd_cliffs(&flat, &ColumnMap::default(), CliffThresholds::default(), 2, 512).unwrap();
    assert!(report.pairs.is_empty());
    assert_eq!(report.flagged, 0);
}

fn semimol() -> Command {
    Command::new(env!("CARGO_BIN_EXE_semimol"))
}

#[test]
fn exit_codes_follow_the_error_class() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("exp.toml");
    fs::write(&cfg_path, fixture(&["strategy=supervised", "train.epochs=1"]).to_toml()).unwrap();

    let ok = semimol()
        .arg("train")
        .arg(&cfg_path)
        .env("SEMIMOL_RUN_ROOT", tmp.path().join("root"))
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(tmp.path().join("root/supervised_seed0/metrics.json").exists());

    let bad = semimol()
        .arg("train")
        .arg(&cfg_path)
        .arg("train.gamma=2")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("gamma"));

    let missing = tmp.path().join("missing.toml");
    fs::write(
        &missing,
        BASE.replace("LABELED", "/nonexistent.csv")
            .replace("POOL", "/nonexistent.smi"),
    )
    .unwrap();
    let out = tmp.path().join("never");
    assert_eq!(
        semimol()
            .arg("train")
            .arg(&missing)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap()
            .status
            .code(),
        Some(3)
    );

    let huge = tmp.path().join("huge.csv");
    fs::write(
        &huge,
        "smiles,label\n".to_string() + &"CCO,1e300\nCCN,-1e300\nCCCC,1e300\n".repeat(6),
    )
    .unwrap();
    let huge_cfg = tmp.path().join("huge.toml");
    fs::write(&huge_cfg, config(&huge, &["strategy=supervised"]).to_toml()).unwrap();
    let aborted = tmp.path().join("aborted");
    let run = semimol()
        .arg("train")
        .arg(&huge_cfg)
        .arg("--out")
        .arg(&aborted)
        .output()
        .unwrap();
    assert_eq!(run.status.code(), Some(4), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(aborted.join("run_log.csv").exists());
    assert!(!aborted.join("metrics.json").exists());

    let inspect = semimol()
        .arg("pseudo-inspect")
        .arg(tmp.path().join("root/supervised_seed0"))
        .args(["--epoch", "0"])
        .output()
        .unwrap();
    assert_eq!(inspect.status.code(), Some(3));
}

#[test]
fn selftest_passes() {
    let out = semimol().arg("selftest").output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("ok")).count(), 7);
}

//! Quick invariant checks over every layer of the stack, for `semimol
//! selftest`. Each check compares an implementation against a small
//! independent computation.

use chemgraph::{parse_smiles, Fingerprint};
use datasets::{cliff_pairs_by, motif_regression, roc_auc, CliffThresholds, GeneratorConfig, Motif};
use models::{Batch, EncoderSpec, InstructorSpec, ModelError, MolInput, Pooling, TargetModel, TargetSpec};
use ndcore::grad_check;
use rand::rngs::mock::StepRng;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semisup::{
    build_hybrid_set, curriculum_step, train, CurriculumState, LabeledSet, PseudoSample, Strategy, TrainConfig,
    TrainData,
};

pub struct Check {
    pub name: &'static str,
    pub outcome: Result<String, String>,
}

fn check(name: &'static str, f: fn() -> Result<String, String>) -> Check {
    Check { name, outcome: f() }
}

pub fn run_all() -> Vec<Check> {
    vec![
        check("parser_corpus", parser_corpus),
        check("curriculum_replay", curriculum_replay),
        check("hybrid_set_enumeration", hybrid_set_enumeration),
        check("roc_auc_pair_count", roc_auc_pair_count),
        check("cliff_pairs_brute_force", cliff_pairs_brute_force),
        check("target_gradients", target_gradients),
        check("degenerate_pool", degenerate_pool),
    ]
}

fn parser_corpus() -> Result<String, String> {
    let lines: Vec<&str> = datasets::DESK_CORPUS
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .collect();
    let mut ok = 0;
    for line in &lines {
        let smiles = line.split_whitespace().next().unwrap_or("");
        if let Ok(g) = parse_smiles(smiles) {
            g.check_invariants().map_err(|e| format!("{smiles}: {e}"))?;
            ok += 1;
        }
    }
    let rate = ok as f64 / lines.len() as f64;
    if rate < 0.99 {
        return Err(format!("{ok}/{} parsed", lines.len()));
    }
    Ok(format!("{ok}/{} parsed", lines.len()))
}

fn curriculum_replay() -> Result<String, String> {
    // (scores, expected gamma after each step)
    let cases: [(&[f64], &[f64]); 3] = [
        (&[0.85, 0.80], &[0.90, 0.85]),
        (&[0.85, 0.88, 0.88, 0.70], &[0.90, 0.90, 0.90, 0.85]),
        (&[0.5, 0.4, 0.3, 0.2], &[0.90, 0.85, 0.80, 0.75]),
    ];
    for (scores, expected) in cases {
        let mut s = CurriculumState::new(0.9, 0.05, 0.0, 5);
        for (&v, &want) in scores.iter().zip(expected) {
            s = curriculum_step(s, v, true);
            if (s.gamma - want).abs() > 1e-12 {
                return Err(format!(
                    "scores {scores:?}: gamma {} where {want} was expected",
                    s.gamma
                ));
            }
        }
    }
    let floor = curriculum_step(
        curriculum_step(CurriculumState::new(0.02, 0.05, 0.0, 5), 1.0, true),
        0.5,
        true,
    );
    if floor.gamma != 0.0 {
        return Err(format!("floor clamp gave {}", floor.gamma));
    }
    Ok("4 trajectories".into())
}

fn hybrid_set_enumeration() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let grid = [0.0, 0.5, 0.8, 0.9, 0.95, 1.0];
    for _ in 0..200 {
        let m = rng.gen_range(0..=8);
        let pool: Vec<PseudoSample> = (0..m)
            .map(|index| PseudoSample {
                index,
                y_hat: 0.0,
                p: grid[rng.gen_range(0..grid.len())],
                c: 0,
                epoch_assigned: 0,
            })
            .collect();
        let gamma = grid[rng.gen_range(0..grid.len())];
        let best = (0u32..1 << m)
            .find(|mask| (0..m).all(|i| (mask >> i & 1 == 1) == (pool[i].p >= gamma)))
            .expect("one subset satisfies the predicate");
        let want: Vec<usize> = (0..m).filter(|i| best >> i & 1 == 1).collect();
        if build_hybrid_set(3, &pool, gamma).admitted != want {
            return Err(format!(
                "gamma {gamma}, pool {:?}",
                pool.iter().map(|s| s.p).collect::<Vec<_>>()
            ));
        }
    }
    Ok("200 instances".into())
}

fn roc_auc_pair_count() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let scores: Vec<f64> = (0..200).map(|_| (rng.gen_range(0..20) as f64) / 20.0).collect();
    let labels: Vec<bool> = (0..200).map(|i| i % 3 == 0 || rng.gen_bool(0.2)).collect();
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if labels[i] && !labels[j] {
                pairs += 1.0;
                wins += if si > sj {
                    1.0
                } else if si == sj {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    let auc = roc_auc(&scores, &labels).map_err(|e| e.to_string())?;
    if (auc - wins / pairs).abs() > 1e-12 {
        return Err(format!("{auc} vs {}", wins / pairs));
    }
    Ok(format!("auc {auc:.4}"))
}

fn cliff_pairs_brute_force() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 30;
    let fps: Vec<Fingerprint> = (0..n)
        .map(|_| Fingerprint::from_bits(16, (0..16).filter(|_| rng.gen_bool(0.4))))
        .collect();
    let y: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..3.0)).collect();
    let t = CliffThresholds {
        similarity: 0.5,
        potency: 1.0,
    };
    let sim = |i: usize, j: usize| chemgraph::tanimoto(&fps[i], &fps[j]).unwrap();
    let got: Vec<(usize, usize)> = cliff_pairs_by(&y, t, sim).iter().map(|p| (p.i, p.j)).collect();
    let mut want = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if sim(i, j) >= t.similarity && (y[i] - y[j]).abs() >= t.potency {
                want.push((i, j));
            }
        }
    }
    if got != want {
        return Err(format!("{} pairs vs {} by enumeration", got.len(), want.len()));
    }
    Ok(format!("{} pairs", got.len()))
}

fn target_gradients() -> Result<String, String> {
    let inputs: Vec<MolInput> = ["CCO", "c1ccccc1O", "CC(=O)N"]
        .iter()
        .map(|s| MolInput::new(&parse_smiles(s).unwrap(), 2, 64))
        .collect();
    let refs: Vec<&MolInput> = inputs.iter().collect();
    let spec = TargetSpec {
        encoder: EncoderSpec::Gin {
            hidden: 4,
            layers: 2,
            pooling: Pooling::Sum,
        },
        fc_layers: 2,
        dropout: 0.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut f = TargetModel::new(spec, &mut rng).map_err(|e| e.to_string())?;
    let names = f.params().names().to_vec();
    for (name, t) in names.iter().zip(f.params_mut().tensors_mut()) {
        if name.ends_with(".b") {
            t.data_mut().iter_mut().for_each(|v| *v += rng.gen_range(0.01..0.1));
        }
    }
    let pred = f.predict(&refs).map_err(|e| e.to_string())?;
    let targets: Vec<f64> = pred.iter().map(|p| p + rng.gen_range(-1.0..1.0)).collect();
    let batch = Batch::new(&refs, f.needs());
    let report = grad_check(
        |tape, p| {
            let y = f
                .forward(tape, p, &batch, &mut StepRng::new(0, 0))
                .map_err(|e| match e {
                    ModelError::Numeric(n) => n,
                    other => panic!("{other}"),
                })?;
            let t = tape.constant(ndcore::Tensor::column(&targets));
            tape.mse(y, t)
        },
        f.params(),
        1e-5,
    )
    .map_err(|e| e.to_string())?;
    if !report.passes(1e-4) {
        return Err(format!("max relative error {:.2e}", report.max_rel_error));
    }
    Ok(format!("max relative error {:.2e}", report.max_rel_error))
}

fn degenerate_pool() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let gen = GeneratorConfig::default();
    let set = |n: usize, rng: &mut ChaCha8Rng| {
        let s = motif_regression(rng, n, &gen, Motif::Amide, 0.2);
        LabeledSet::new(
            s.iter().map(|m| MolInput::new(&m.graph, 2, 64)).collect(),
            s.iter().map(|m| m.y).collect(),
        )
    };
    let data = TrainData {
        train: set(16, &mut rng),
        val: set(8, &mut rng),
        test: None,
        pool: Vec::new(),
    };
    let target = TargetSpec {
        encoder: EncoderSpec::Gin {
            hidden: 4,
            layers: 1,
            pooling: Pooling::Sum,
        },
        fc_layers: 1,
        dropout: 0.2,
    };
    let instructor = InstructorSpec {
        encoder: EncoderSpec::FingerprintMlp {
            width: 64,
            hidden: 4,
            layers: 1,
        },
        fusion_hidden: 4,
        fusion_layers: 2,
        dropout: 0.0,
    };
    let cfg = TrainConfig {
        lr_f: 1e-2,
        lr_g: 1e-2,
        batch_size: 4,
        epochs: 3,
        warmup_epochs_f: 2,
        warmup_epochs_g: 1,
        trace_params: true,
        ..TrainConfig::default()
    };
    let semi = train(Strategy::Semimol, target, instructor, &data, &cfg).map_err(|e| e.to_string())?;
    let sup = train(Strategy::Supervised, target, instructor, &data, &cfg).map_err(|e| e.to_string())?;
    let again = train(Strategy::Semimol, target, instructor, &data, &cfg).map_err(|e| e.to_string())?;
    if semi.param_trace != sup.param_trace {
        return Err("empty-pool run diverged from supervised training".into());
    }
    if semi.log != again.log {
        return Err("repeated run produced a different log".into());
    }
    Ok(format!("{} epochs bit-identical", cfg.epochs))
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_checks_pass() {
        for c in super::run_all() {
            assert!(c.outcome.is_ok(), "{}: {:?}", c.name, c.outcome);
        }
    }
}

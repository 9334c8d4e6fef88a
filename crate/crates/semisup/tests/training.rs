use datasets::{motif_regression, GeneratorConfig, Motif};
use models::{EncoderSpec, Instructor, InstructorSpec, MolInput, Pooling, TargetModel, TargetSpec};
use ndcore::RngStreams;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use semisup::{
    build_d_prime, build_hybrid_set, evaluate, percentile_fraction, score_confidences, train, train_baseline,
    LabeledSet, Metric, PseudoPool, PseudoSample, Strategy, Task, TrainConfig, TrainData, TrainError,
};

const WIDTH: usize = 128;

fn set(samples: &[datasets::SyntheticSample]) -> LabeledSet {
    LabeledSet::new(
        samples.iter().map(|s| MolInput::new(&s.graph, 2, WIDTH)).collect(),
        samples.iter().map(|s| s.y).collect(),
    )
}

fn data(seed: u64, n_train: usize, n_pool: usize) -> TrainData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gen = GeneratorConfig::default();
    let train = motif_regression(&mut rng, n_train, &gen, Motif::Amide, 0.2);
    let val = motif_regression(&mut rng, 12, &gen, Motif::Amide, 0.2);
    let test = motif_regression(&mut rng, 12, &gen, Motif::Amide, 0.2);
    let pool = motif_regression(&mut rng, n_pool, &gen, Motif::Amide, 0.2);
    TrainData {
        train: set(&train),
        val: set(&val),
        test: Some(set(&test)),
        pool: pool.iter().map(|s| MolInput::new(&s.graph, 2, WIDTH)).collect(),
    }
}

fn target(dropout: f64) -> TargetSpec {
    TargetSpec {
        encoder: EncoderSpec::Gin {
            hidden: 8,
            layers: 2,
            pooling: Pooling::Sum,
        },
        fc_layers: 2,
        dropout,
    }
}

fn instructor() -> InstructorSpec {
    InstructorSpec {
        encoder: EncoderSpec::FingerprintMlp {
            width: WIDTH,
            hidden: 8,
            layers: 1,
        },
        fusion_hidden: 8,
        fusion_layers: 2,
        dropout: 0.0,
    }
}

fn config() -> TrainConfig {
    TrainConfig {
        lr_f: 1e-2,
        lr_g: 1e-2,
        batch_size: 8,
        epochs: 8,
        warmup_epochs_f: 5,
        warmup_epochs_g: 2,
        gamma: 0.6,
        delta_gamma: 0.1,
        k: 3,
        trace_params: true,
        ..TrainConfig::default()
    }
}

fn sample(index: usize, p: f64) -> PseudoSample {
    PseudoSample {
        index,
        y_hat: 0.0,
        p,
        c: 0,
        epoch_assigned: 0,
    }
}

proptest! {
    #[test]
    fn hybrid_set_matches_subset_enumeration(
        ps in prop::collection::vec(prop::sample::select(vec![0.0, 0.25, 0.5, 0.8, 0.9, 0.95, 1.0]), 0..8),
        gamma in prop::sample::select(vec![0.0, 0.25, 0.5, 0.8, 0.9, 0.95, 1.0]),
        labeled in 0usize..5,
    ) {
        let pool: Vec<PseudoSample> = ps.iter().enumerate().map(|(i, &p)| sample(i, p)).collect();
        let consistent: Vec<Vec<usize>> = (0u32..1 << pool.len())
            .map(|mask| (0..pool.len()).filter(|i| mask & (1 << i) != 0).collect::<Vec<_>>())
            .filter(|subset| (0..pool.len()).all(|i| subset.contains(&i) == (pool[i].p >= gamma)))
            .collect();
        prop_assert_eq!(consistent.len(), 1);
        let h = build_hybrid_set(labeled, &pool, gamma);
        prop_assert_eq!(h.labeled, labeled);
        prop_assert_eq!(&h.admitted, &consistent[0]);
    }

    #[test]
    fn percentile_fraction_ramps_to_one(start in 0.0f64..1.0, epochs in 1usize..40) {
        let qs: Vec<f64> = (0..epochs).map(|e| percentile_fraction(start, e, epochs)).collect();
        prop_assert!(qs.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(*qs.last().unwrap(), 1.0);
        prop_assert!(qs.iter().all(|&q| (start..=1.0).contains(&q)));
    }
}

#[test]
fn hybrid_set_examples() {
    let pool = [sample(0, 0.91), sample(1, 0.80), sample(2, 0.95)];
    assert_eq!(build_hybrid_set(4, &pool, 0.9).admitted, vec![0, 2]);
    assert_eq!(build_hybrid_set(4, &pool, 0.0).admitted, vec![0, 1, 2]);
    assert!(build_hybrid_set(4, &pool, 0.99).admitted.is_empty());
    assert_eq!(build_hybrid_set(4, &pool, 0.99).len(), 4);
}

#[test]
fn gamma_replays_from_the_log() {
    let d = data(1, 24, 40);
    let cfg = TrainConfig { epochs: 12, ..config() };
    let out = train(Strategy::Semimol, target(0.0), instructor(), &d, &cfg).unwrap();
    assert_eq!(out.log.len(), cfg.epochs);
    let mut expected = cfg.gamma;
    for (e, row) in out.log.iter().enumerate() {
        assert_eq!(row.gamma, Some(expected), "epoch {e}");
        if e > 0 && row.val_metric < out.log[e - 1].val_metric {
            expected = (expected - cfg.delta_gamma).max(cfg.gamma_min);
        }
    }
    assert_eq!(out.gamma_final, Some(expected));
    let gammas: Vec<f64> = out.log.iter().map(|r| r.gamma.unwrap()).collect();
    assert!(gammas.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn pseudo_labels_refresh_every_k_epochs() {
    let d = data(2, 24, 30);
    let cfg = TrainConfig {
        epochs: 10,
        dump_epochs: (0..10).collect(),
        ..config()
    };
    let out = train(Strategy::Semimol, target(0.0), instructor(), &d, &cfg).unwrap();
    assert_eq!(out.dumps.len(), cfg.epochs);
    for (e, dump) in out.dumps.iter().enumerate() {
        assert_eq!(dump.epoch, e);
        assert_eq!(dump.samples.len(), 30);
        assert!(dump
            .samples
            .iter()
            .all(|s| s.epoch_assigned == e / cfg.k * cfg.k && s.c == 0));
        if e % cfg.k != 0 {
            let prev: Vec<f64> = out.dumps[e - 1].samples.iter().map(|s| s.y_hat).collect();
            let now: Vec<f64> = dump.samples.iter().map(|s| s.y_hat).collect();
            assert_eq!(prev, now, "pseudo-labels moved between refreshes at epoch {e}");
        }
    }
}

#[test]
fn labeled_data_is_always_in_the_hybrid_set() {
    let d = data(3, 20, 30);
    let cfg = TrainConfig {
        gamma: 0.5,
        dump_epochs: (0..8).collect(),
        ..config()
    };
    let out = train(Strategy::Semimol, target(0.0), instructor(), &d, &cfg).unwrap();
    for (row, dump) in out.log.iter().zip(&out.dumps) {
        let gamma = dump.gamma.unwrap();
        for (s, &a) in dump.samples.iter().zip(&dump.admitted) {
            assert_eq!(a, s.p >= gamma);
        }
        let admitted = dump.admitted.iter().filter(|&&a| a).count();
        assert_eq!(row.hybrid_size, d.train.len() + admitted);
    }
}

#[test]
fn runs_are_reproducible() {
    let d = data(4, 20, 30);
    for strategy in Strategy::ALL {
        let cfg = TrainConfig { epochs: 4, ..config() };
        let a = train(strategy, target(0.2), instructor(), &d, &cfg).unwrap();
        let b = train(strategy, target(0.2), instructor(), &d, &cfg).unwrap();
        assert_eq!(a.log, b.log, "{strategy}");
        assert_eq!(a.param_trace, b.param_trace, "{strategy}");
        assert!(a.log.iter().all(|r| r.wall_ms == 0));
    }
}

#[test]
fn empty_pool_reproduces_supervised_updates() {
    let d = data(5, 24, 0);
    let cfg = config();
    let semi = train(Strategy::Semimol, target(0.2), instructor(), &d, &cfg).unwrap();
    let sup = train_baseline(Strategy::Supervised, target(0.2), &d, &cfg).unwrap();
    assert_eq!(semi.param_trace.len(), cfg.epochs);
    assert_eq!(semi.param_trace, sup.param_trace);
    let val = |o: &semisup::RunOutput| o.log.iter().map(|r| r.val_metric).collect::<Vec<_>>();
    assert_eq!(val(&semi), val(&sup));
    assert_eq!(semi.best_val, sup.best_val);
}

#[test]
fn closed_threshold_reproduces_supervised_updates() {
    let d = data(6, 24, 30);
    let cfg = TrainConfig {
        lambda: 0.0,
        gamma: 1.0,
        dump_epochs: (0..8).collect(),
        ..config()
    };
    let semi = train(Strategy::FixedThreshold, target(0.2), instructor(), &d, &cfg).unwrap();
    assert!(semi.dumps.iter().all(|d| d.samples.iter().all(|s| s.p < 1.0)));
    let sup = train_baseline(Strategy::Supervised, target(0.2), &d, &cfg).unwrap();
    assert_eq!(semi.param_trace, sup.param_trace);
}

#[test]
fn pi_model_without_dropout_is_supervised() {
    let d = data(7, 24, 30);
    let cfg = config();
    let pi = train_baseline(Strategy::PiModel, target(0.0), &d, &cfg).unwrap();
    let sup = train_baseline(Strategy::Supervised, target(0.0), &d, &cfg).unwrap();
    for (a, b) in pi.log.iter().zip(&sup.log) {
        assert!((a.val_metric - b.val_metric).abs() < 1e-9);
    }
    for (a, b) in pi.param_trace.iter().zip(&sup.param_trace) {
        let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-9, "parameters differ by {diff}");
    }
}

#[test]
fn fixed_threshold_keeps_gamma() {
    let d = data(8, 20, 30);
    let out = train(Strategy::FixedThreshold, target(0.0), instructor(), &d, &config()).unwrap();
    assert!(out.log.iter().all(|r| r.gamma == Some(config().gamma)));
    assert_eq!(out.gamma_final, Some(config().gamma));
}

#[test]
fn percentile_admits_the_ramped_fraction() {
    let d = data(9, 20, 30);
    let cfg = TrainConfig {
        epochs: 6,
        dump_epochs: (0..6).collect(),
        ..config()
    };
    let out = train(Strategy::Percentile, target(0.0), instructor(), &d, &cfg).unwrap();
    for (e, dump) in out.dumps.iter().enumerate() {
        let q = percentile_fraction(cfg.percentile_start, e, cfg.epochs);
        let take = (q * 30.0 - 1e-9).ceil() as usize;
        assert_eq!(dump.admitted.iter().filter(|&&a| a).count(), take);
        let cutoff = dump.gamma.unwrap();
        for (s, &a) in dump.samples.iter().zip(&dump.admitted) {
            if a {
                assert!(s.p >= cutoff);
            }
        }
    }
    assert_eq!(out.log.last().unwrap().hybrid_size, d.train.len() + 30);
}

#[test]
fn confidences_are_per_sample() {
    let d = data(10, 10, 10);
    let streams = RngStreams::new(3);
    let f = TargetModel::new(target(0.0), &mut streams.stream("init_f")).unwrap();
    let mut g = Instructor::new(instructor(), &mut streams.stream("init_g")).unwrap();
    let pool_inputs: Vec<&MolInput> = d.pool.iter().collect();
    let mut pool = PseudoPool::default();
    semisup::assign_pseudo_labels(&f, &pool_inputs, &mut pool, 0, 1, Task::Regression).unwrap();
    let cfg = TrainConfig::default();
    let dp = build_d_prime(&f, &d.train, &pool_inputs, &pool, &cfg).unwrap();
    assert_eq!(dp.c.iter().sum::<f64>(), 10.0);
    let inputs: Vec<&MolInput> = d.train.inputs.iter().chain(&d.pool).collect();

    let (p, _) = score_confidences(&g, &inputs, &dp).unwrap();
    assert!(p.iter().all(|&v| v > 0.0 && v < 1.0));

    // reversing D' reverses p: the scaler statistics are order-free
    let rev_inputs: Vec<&MolInput> = inputs.iter().rev().copied().collect();
    let rev = semisup::DPrime {
        y: dp.y.iter().rev().copied().collect(),
        hf: dp.hf.iter().rev().copied().collect(),
        c: dp.c.iter().rev().copied().collect(),
    };
    let (p_rev, _) = score_confidences(&g, &rev_inputs, &rev).unwrap();
    let back: Vec<f64> = p_rev.into_iter().rev().collect();
    for (a, b) in p.iter().zip(&back) {
        assert!((a - b).abs() < 1e-12);
    }

    let zeros = vec![0.0; g.params().scalar_count()];
    g.params_mut().load_flat(&zeros);
    let (p0, _) = score_confidences(&g, &inputs, &dp).unwrap();
    assert!(p0.iter().all(|&v| v == 0.5));
}

#[test]
fn no_warmup_leaves_the_initial_model() {
    let d = data(11, 12, 0);
    let cfg = TrainConfig {
        warmup_epochs_f: 0,
        epochs: 1,
        seed: 9,
        ..config()
    };
    let out = train_baseline(Strategy::Supervised, target(0.0), &d, &cfg).unwrap();
    let f0 = TargetModel::new(target(0.0), &mut RngStreams::new(9).stream("init_f")).unwrap();
    assert_eq!(out.warmup_val, evaluate(&f0, &d.val, Metric::Rmse).unwrap());
}

#[test]
fn target_and_instructor_own_disjoint_parameters() {
    let d = data(12, 12, 12);
    let out = train(Strategy::Semimol, target(0.0), instructor(), &d, &config()).unwrap();
    let g = out.g.unwrap();
    assert!(out.f.params().names().iter().all(|n| n.starts_with("f.")));
    assert!(g.params().names().iter().all(|n| n.starts_with("g.")));
}

#[test]
fn empty_training_set_is_rejected() {
    let mut d = data(13, 12, 12);
    d.train = LabeledSet::default();
    let err = train(Strategy::Semimol, target(0.0), instructor(), &d, &config()).unwrap_err();
    assert!(matches!(err, TrainError::EmptyDataset(_)));
}

#[test]
fn overflowing_loss_aborts() {
    let mut d = data(14, 12, 12);
    d.train.y.iter_mut().for_each(|y| *y = 1e300);
    let err = train_baseline(Strategy::Supervised, target(0.0), &d, &config()).unwrap_err();
    assert!(matches!(err, TrainError::NonFiniteLoss { phase: "warmup f", .. }));
}

#[test]
fn invalid_configs_are_rejected() {
    let d = data(15, 12, 12);
    for cfg in [
        TrainConfig { gamma: 1.5, ..config() },
        TrainConfig { k: 0, ..config() },
        TrainConfig { epochs: 0, ..config() },
        TrainConfig {
            delta_gamma: 0.0,
            ..config()
        },
        TrainConfig {
            metric: Metric::RocAuc,
            ..config()
        },
    ] {
        let err = train(Strategy::Semimol, target(0.0), instructor(), &d, &cfg).unwrap_err();
        assert!(matches!(err, TrainError::InvalidConfig(_)));
    }
}

#[test]
fn pool_cap_subsamples_once() {
    let d = data(16, 12, 40);
    let cfg = TrainConfig {
        pool_cap: 15,
        epochs: 2,
        dump_epochs: vec![1],
        ..config()
    };
    let out = train(Strategy::Semimol, target(0.0), instructor(), &d, &cfg).unwrap();
    assert_eq!(out.pool_indices.len(), 15);
    assert!(out.pool_indices.windows(2).all(|w| w[0] < w[1]));
    assert!(out.pool_indices.iter().all(|&i| i < 40));
    assert_eq!(out.dumps[0].samples.len(), 15);
}

#[test]
fn classification_runs_with_roc_auc() {
    let mut d = data(17, 30, 20);
    for set in [&mut d.train, &mut d.val] {
        set.y.iter_mut().for_each(|y| *y = if *y >= 1.0 { 1.0 } else { 0.0 });
    }
    d.test = None;
    for set in [&mut d.train, &mut d.val] {
        set.y[0] = 1.0;
        set.y[1] = 0.0;
    }
    let cfg = TrainConfig {
        task: Task::Classification,
        metric: Metric::RocAuc,
        dump_epochs: vec![0],
        ..config()
    };
    let out = train(Strategy::Semimol, target(0.0), instructor(), &d, &cfg).unwrap();
    assert!(out.dumps[0].samples.iter().all(|s| s.y_hat == 0.0 || s.y_hat == 1.0));
    let mut expected = cfg.gamma;
    for (e, row) in out.log.iter().enumerate() {
        assert_eq!(row.gamma, Some(expected));
        assert!((0.0..=1.0).contains(&row.val_metric));
        if e > 0 && row.val_metric > out.log[e - 1].val_metric {
            expected = (expected - cfg.delta_gamma).max(0.0);
        }
    }
}

use chemgraph::{parse_smiles, write_random_smiles, NODE_DIM};
use models::{
    read_checkpoint, write_checkpoint, Batch, EncoderSpec, FeatureScaler, Instructor, InstructorSpec, ModelError,
    MolInput, Pooling, TargetModel, TargetSpec,
};
use ndcore::{grad_check, RngStreams, Tensor};
use rand::rngs::mock::StepRng;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gin_spec(hidden: usize, layers: usize, pooling: Pooling) -> TargetSpec {
    TargetSpec {
        encoder: EncoderSpec::Gin {
            hidden,
            layers,
            pooling,
        },
        fc_layers: 2,
        dropout: 0.2,
    }
}

fn fp_instructor() -> InstructorSpec {
    InstructorSpec {
        encoder: EncoderSpec::FingerprintMlp {
            width: 256,
            hidden: 8,
            layers: 1,
        },
        fusion_hidden: 8,
        fusion_layers: 2,
        dropout: 0.0,
    }
}

fn input(smiles: &str) -> MolInput {
    MolInput::new(&parse_smiles(smiles).unwrap(), 2, 256)
}

const MOLECULES: &[&str] = &["CCO", "c1ccccc1O", "CC(=O)Nc1ccc(O)cc1", "C1CCNCC1", "O=C(O)CCl"];

#[test]
fn zero_network_outputs_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut f = TargetModel::new(gin_spec(8, 2, Pooling::Attention), &mut rng).unwrap();
    for t in f.params_mut().tensors_mut() {
        t.data_mut().fill(0.0);
    }
    let inputs: Vec<MolInput> = MOLECULES.iter().map(|s| input(s)).collect();
    let refs: Vec<&MolInput> = inputs.iter().collect();
    assert!(f.predict(&refs).unwrap().iter().all(|&y| y == 0.0));
}

/// Hand evaluation of a one-layer GIN with sum pooling on a single atom:
/// no neighbors and no bonds, so the layer sees only `(1 + eps) h`.
#[test]
fn single_atom_closed_form() {
    let spec = TargetSpec {
        encoder: EncoderSpec::Gin {
            hidden: 2,
            layers: 1,
            pooling: Pooling::Sum,
        },
        fc_layers: 1,
        dropout: 0.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut f = TargetModel::new(spec, &mut rng).unwrap();
    let x = input("C");
    let names: Vec<String> = f.params().names().to_vec();
    let win: Vec<f64> = (0..NODE_DIM * 2).map(|i| ((i % 7) as f64 - 3.0) * 0.1).collect();
    let set = |name: &str, value: Tensor, f: &mut TargetModel| {
        let idx = names.iter().position(|n| n == name).unwrap_or_else(|| panic!("{name}"));
        f.params_mut().tensors_mut()[idx] = value;
    };
    set(
        "f.encoder.input.w",
        Tensor::new(NODE_DIM, 2, win.clone()).unwrap(),
        &mut f,
    );
    set("f.encoder.input.b", Tensor::row(&[0.05, -0.1]), &mut f);
    set("f.encoder.gin0.eps", Tensor::scalar(0.5), &mut f);
    set(
        "f.encoder.gin0.mlp.0.w",
        Tensor::new(2, 2, vec![1.0, -1.0, 0.5, 2.0]).unwrap(),
        &mut f,
    );
    set("f.encoder.gin0.mlp.0.b", Tensor::row(&[0.1, 0.2]), &mut f);
    set(
        "f.encoder.gin0.mlp.1.w",
        Tensor::new(2, 2, vec![0.3, 0.0, -0.4, 1.5]).unwrap(),
        &mut f,
    );
    set("f.encoder.gin0.mlp.1.b", Tensor::row(&[0.0, -0.05]), &mut f);
    set("f.head.0.w", Tensor::column(&[2.0, -3.0]), &mut f);
    set("f.head.0.b", Tensor::scalar(0.25), &mut f);

    let feats = x.node_features();
    let mut h0 = [0.05, -0.1];
    for (k, &v) in feats.iter().enumerate() {
        h0[0] += v * win[k * 2];
        h0[1] += v * win[k * 2 + 1];
    }
    let z = [1.5 * h0[0], 1.5 * h0[1]];
    let relu = |v: f64| v.max(0.0);
    let a = [relu(z[0] * 1.0 + z[1] * 0.5 + 0.1), relu(-z[0] + z[1] * 2.0 + 0.2)];
    let h1 = [relu(a[0] * 0.3 + a[1] * -0.4), relu(a[0] * 0.0 + a[1] * 1.5 - 0.05)];
    let expected = 2.0 * h1[0] - 3.0 * h1[1] + 0.25;
    let got = f.predict(&[&x]).unwrap()[0];
    assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
}

#[test]
fn atom_order_does_not_change_outputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for pooling in [Pooling::Sum, Pooling::Mean, Pooling::Attention] {
        let f = TargetModel::new(gin_spec(16, 3, pooling), &mut rng).unwrap();
        for s in MOLECULES {
            let g = parse_smiles(s).unwrap();
            let base = f.predict(&[&MolInput::new(&g, 2, 256)]).unwrap()[0];
            for _ in 0..5 {
                let spelled = write_random_smiles(&g, &mut rng);
                let other = MolInput::new(&parse_smiles(&spelled).unwrap(), 2, 256);
                let y = f.predict(&[&other]).unwrap()[0];
                assert!((y - base).abs() < 1e-9, "{s} vs {spelled}: {base} {y}");
            }
        }
    }
}

#[test]
fn batching_matches_single_predictions() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let f = TargetModel::new(gin_spec(8, 2, Pooling::Attention), &mut rng).unwrap();
    let inputs: Vec<MolInput> = MOLECULES.iter().map(|s| input(s)).collect();
    let refs: Vec<&MolInput> = inputs.iter().collect();
    let together = f.predict(&refs).unwrap();
    for (i, m) in inputs.iter().enumerate() {
        let alone = f.predict(&[m]).unwrap()[0];
        assert!((alone - together[i]).abs() < 1e-12);
    }
}

#[test]
fn init_is_seeded_and_counted() {
    let spec = TargetSpec {
        encoder: EncoderSpec::Gin {
            hidden: 64,
            layers: 3,
            pooling: Pooling::Attention,
        },
        fc_layers: 2,
        dropout: 0.2,
    };
    let a = TargetModel::new(spec, &mut RngStreams::new(9).stream("init_f")).unwrap();
    let b = TargetModel::new(spec, &mut RngStreams::new(9).stream("init_f")).unwrap();
    assert_eq!(a.params(), b.params());
    // input 26*64+64, per layer 1 + 5*64 + 2*(64*64+64), attention 64,
    // head (64*64+64) + (64+1)
    let expected = (26 * 64 + 64) + 3 * (1 + 5 * 64 + 2 * (64 * 64 + 64)) + 64 + (64 * 64 + 64) + 65;
    assert_eq!(a.params().scalar_count(), expected);
    assert_eq!(TargetModel::param_count(&spec), expected);

    let eps: Vec<f64> = a
        .params()
        .names()
        .iter()
        .zip(a.params().tensors())
        .filter(|(n, _)| n.ends_with(".eps"))
        .map(|(_, t)| t.item())
        .collect();
    assert_eq!(eps, vec![0.0; 3]);

    let g = Instructor::new(fp_instructor(), &mut RngStreams::new(9).stream("init_g")).unwrap();
    assert_eq!(g.params().scalar_count(), Instructor::param_count(&fp_instructor()));
}

#[test]
fn invalid_specs_are_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for spec in [gin_spec(0, 2, Pooling::Sum), gin_spec(4, 0, Pooling::Sum)] {
        assert!(matches!(
            TargetModel::new(spec, &mut rng),
            Err(ModelError::InvalidSpec(_))
        ));
    }
    let mut bad = gin_spec(4, 1, Pooling::Sum);
    bad.dropout = 1.0;
    assert!(TargetModel::new(bad, &mut rng).is_err());
}

#[test]
fn instructor_confidence_contract() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut g = Instructor::new(fp_instructor(), &mut rng).unwrap();
    let inputs: Vec<MolInput> = MOLECULES.iter().map(|s| input(s)).collect();
    let refs: Vec<&MolInput> = inputs.iter().collect();
    let y = [0.5, 1.0, -2.0, 3.0, 0.0];
    let hf = [0.1, f64::INFINITY, 0.0, 1e9, 2.0];
    let scaler = FeatureScaler::fit(&y, &hf);
    let p = g.confidences(&refs, &y, &hf, &scaler).unwrap();
    assert!(p.iter().all(|&v| v.is_finite() && v > 0.0 && v < 1.0), "{p:?}");

    let last = g.fusion().layers.last().copied().unwrap();
    g.params_mut().get_mut(last.w).data_mut().fill(0.0);
    g.params_mut().get_mut(last.b).data_mut().fill(0.0);
    let p = g.confidences(&refs, &y, &hf, &scaler).unwrap();
    assert!(p.iter().all(|&v| v == 0.5));
}

/// Moves biases off zero so no ReLU input starts exactly on the kink.
fn lift_biases(store: &mut ndcore::ParamStore, rng: &mut ChaCha8Rng) {
    let names = store.names().to_vec();
    for (name, t) in names.iter().zip(store.tensors_mut()) {
        if name.ends_with(".b") {
            t.data_mut().iter_mut().for_each(|v| *v += rng.gen_range(0.01..0.1));
        }
    }
}

/// Targets a unit-scale offset away from the predictions, keeping the loss
/// (and so the finite-difference roundoff) of order one.
fn nearby_targets(pred: &[f64], rng: &mut ChaCha8Rng) -> Tensor {
    let t: Vec<f64> = pred.iter().map(|&y| y + rng.gen_range(-1.0..1.0)).collect();
    Tensor::column(&t)
}

#[test]
fn gradients_match_finite_differences() {
    let inputs: Vec<MolInput> = MOLECULES.iter().map(|s| input(s)).collect();
    let refs: Vec<&MolInput> = inputs.iter().collect();
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = TargetModel::new(gin_spec(8, 2, Pooling::Attention), &mut rng).unwrap();
        lift_biases(f.params_mut(), &mut rng);
        let targets = nearby_targets(&f.predict(&refs).unwrap(), &mut rng);
        let batch = Batch::new(&refs, f.needs());
        for loss in ["mse", "rmse", "mae"] {
            let report = grad_check(
                |tape, p| {
                    let y = f
                        .forward(tape, p, &batch, &mut StepRng::new(0, 0))
                        .map_err(|e| match e {
                            ModelError::Numeric(n) => n,
                            other => panic!("{other}"),
                        })?;
                    let t = tape.constant(targets.clone());
                    match loss {
                        "mse" => tape.mse(y, t),
                        "rmse" => tape.rmse(y, t, 1e-12),
                        _ => tape.mae(y, t),
                    }
                },
                f.params(),
                1e-5,
            )
            .unwrap();
            assert!(report.passes(1e-4), "seed {seed} {loss}: {report:?}");
        }
    }
}

#[test]
fn instructor_gradients_match_finite_differences() {
    let inputs: Vec<MolInput> = MOLECULES.iter().map(|s| input(s)).collect();
    let refs: Vec<&MolInput> = inputs.iter().collect();
    let labels = [1.0, 0.0, 1.0, 1.0, 0.0];
    // (N + M) / 2N for the positives, (N + M) / 2M for the negatives
    let weights: Vec<f64> = labels
        .iter()
        .map(|&l| if l == 1.0 { 5.0 / 6.0 } else { 5.0 / 4.0 })
        .collect();
    let gin = EncoderSpec::Gin {
        hidden: 6,
        layers: 2,
        pooling: Pooling::Attention,
    };
    for (seed, encoder) in [(0, gin), (1, fp_instructor().encoder)] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = InstructorSpec {
            encoder,
            ..fp_instructor()
        };
        let mut g = Instructor::new(spec, &mut rng).unwrap();
        lift_biases(g.params_mut(), &mut rng);
        let y: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let hf: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let batch = Batch::new(&refs, g.needs());
        let report = grad_check(
            |tape, p| {
                let z = g
                    .forward_logits(tape, p, &batch, &y, &hf, &mut StepRng::new(0, 0))
                    .map_err(|e| match e {
                        ModelError::Numeric(n) => n,
                        other => panic!("{other}"),
                    })?;
                let prob = tape.sigmoid(z);
                tape.bce(prob, &labels, Some(&weights))
            },
            g.params(),
            1e-5,
        )
        .unwrap();
        assert!(report.passes(1e-4), "seed {seed}: {report:?}");
    }
}

#[test]
fn checkpoint_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let f = TargetModel::new(gin_spec(8, 2, Pooling::Mean), &mut rng).unwrap();
    let mut bytes = Vec::new();
    write_checkpoint(&mut bytes, &f.layout_tag(), f.params()).unwrap();
    assert_eq!(&bytes[..8], b"SMOLCKPT");
    assert_eq!(bytes.len(), 8 + 4 + 8 + 8 + 8 * f.params().scalar_count());

    let mut g = TargetModel::new(gin_spec(8, 2, Pooling::Mean), &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    assert_ne!(g.params(), f.params());
    let tag = g.layout_tag();
    read_checkpoint(bytes.as_slice(), &tag, g.params_mut()).unwrap();
    assert_eq!(g.params(), f.params());

    let mut other = TargetModel::new(gin_spec(8, 2, Pooling::Sum), &mut rng).unwrap();
    let tag = other.layout_tag();
    assert!(read_checkpoint(bytes.as_slice(), &tag, other.params_mut()).is_err());
}

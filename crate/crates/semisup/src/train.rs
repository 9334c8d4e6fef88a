use std::time::Instant;

use models::{Batch, FeatureScaler, Instructor, InstructorSpec, MolInput, Needs, TargetModel, TargetSpec};
use ndcore::{sigmoid, Adam, ParamStore, RngStreams, Tape};
use rand::seq::{index, SliceRandom};
use rand_chacha::ChaCha8Rng;

use crate::config::{Metric, Strategy, TrainConfig};
use crate::curriculum::{curriculum_step, CurriculumState};
use crate::data::{LabeledSet, TrainData};
use crate::error::{Result, TrainError};
use crate::hybrid::{
    assign_pseudo_labels, build_hybrid_set, percentile_admission, percentile_fraction, PseudoPool, PseudoSample,
};
use crate::log::EpochLog;
use crate::losses::{batch_loss, class_weights, instructor_loss, per_sample_loss, target_loss};

/// Pseudo pool snapshot taken after admission at one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoDump {
    pub epoch: usize,
    pub gamma: Option<f64>,
    pub samples: Vec<PseudoSample>,
    pub admitted: Vec<bool>,
}

/// Result of one training run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub strategy: Strategy,
    /// f at the best validation score (warmup state included).
    pub f: TargetModel,
    /// g saved alongside the best f, for instructor strategies.
    pub g: Option<Instructor>,
    pub log: Vec<EpochLog>,
    /// Main-loop epoch of the best checkpoint; `None` when the warmup state
    /// was never beaten.
    pub best_epoch: Option<usize>,
    pub best_val: f64,
    pub warmup_val: f64,
    pub gamma_final: Option<f64>,
    pub dumps: Vec<PseudoDump>,
    /// Flattened f parameters after every main-loop epoch, when traced.
    pub param_trace: Vec<Vec<f64>>,
    /// Indices into the supplied pool that survived the cap.
    pub pool_indices: Vec<usize>,
}

/// Labels, `H_f` values and observability masks over `D'` (training
/// molecules first, then the pool in index order).
#[derive(Debug, Clone, PartialEq)]
pub struct DPrime {
    pub y: Vec<f64>,
    pub hf: Vec<f64>,
    pub c: Vec<f64>,
}

impl DPrime {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

/// Eval-mode `H_f(f(x'), y')` for every member of `D'`.
pub fn build_d_prime(
    f: &TargetModel,
    train: &LabeledSet,
    pool_inputs: &[&MolInput],
    pool: &PseudoPool,
    cfg: &TrainConfig,
) -> Result<DPrime> {
    let out_train = f.predict(&train.refs())?;
    let out_pool = f.predict(pool_inputs)?;
    let y: Vec<f64> = train
        .y
        .iter()
        .copied()
        .chain(pool.samples.iter().map(|s| s.y_hat))
        .collect();
    let hf = out_train
        .iter()
        .chain(&out_pool)
        .zip(&y)
        .map(|(&o, &t)| per_sample_loss(cfg.task, cfg.loss, o, t))
        .collect();
    let c = std::iter::repeat_n(1.0, train.len())
        .chain(std::iter::repeat_n(0.0, pool.len()))
        .collect();
    Ok(DPrime { y, hf, c })
}

/// Instructor confidences for every member of `D'`, with features
/// standardized by `D'` statistics.
pub fn score_confidences(g: &Instructor, inputs: &[&MolInput], dp: &DPrime) -> Result<(Vec<f64>, FeatureScaler)> {
    let scaler = FeatureScaler::fit(&dp.y, &dp.hf);
    Ok((g.confidences(inputs, &dp.y, &dp.hf, &scaler)?, scaler))
}

/// Validation or test score of `f` under `metric`.
pub fn evaluate(f: &TargetModel, set: &LabeledSet, metric: Metric) -> Result<f64> {
    let out = f.predict(&set.refs())?;
    Ok(match metric {
        Metric::Rmse => datasets::rmse(&out, &set.y)?,
        Metric::Mae => datasets::mae(&out, &set.y)?,
        Metric::RocAuc => {
            let scores: Vec<f64> = out.iter().map(|&z| sigmoid(z)).collect();
            let labels: Vec<bool> = set.y.iter().map(|&y| y >= 0.5).collect();
            datasets::roc_auc(&scores, &labels)?
        }
    })
}

fn normalized(metric: Metric, s: f64) -> f64 {
    if metric.lower_is_better() {
        s
    } else {
        -s
    }
}

struct Streams {
    init_f: ChaCha8Rng,
    init_g: ChaCha8Rng,
    dropout_f: ChaCha8Rng,
    dropout_g: ChaCha8Rng,
    shuffle_f: ChaCha8Rng,
    shuffle_g: ChaCha8Rng,
    pool: ChaCha8Rng,
}

impl Streams {
    fn new(seed: u64) -> Self {
        let s = RngStreams::new(seed);
        Streams {
            init_f: s.stream("init_f"),
            init_g: s.stream("init_g"),
            dropout_f: s.stream("dropout_f"),
            dropout_g: s.stream("dropout_g"),
            shuffle_f: s.stream("shuffle_f"),
            shuffle_g: s.stream("shuffle_g"),
            pool: s.stream("pool"),
        }
    }
}

/// One row of `D''`: molecule, target and whether the target is a
/// pseudo-label.
type Item<'a> = (&'a MolInput, f64, bool);

/// One shuffled minibatch sweep of f. Returns the sample-weighted mean loss,
/// or NaN as soon as a minibatch loss is not finite.
fn sweep_f(
    f: &mut TargetModel,
    opt: &mut Adam,
    items: &[Item],
    cfg: &TrainConfig,
    shuffle: &mut ChaCha8Rng,
    dropout: &mut ChaCha8Rng,
) -> Result<f64> {
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.shuffle(shuffle);
    let mut total = 0.0;
    for chunk in order.chunks(cfg.batch_size) {
        let inputs: Vec<&MolInput> = chunk.iter().map(|&i| items[i].0).collect();
        let y: Vec<f64> = chunk.iter().map(|&i| items[i].1).collect();
        let pseudo: Vec<bool> = chunk.iter().map(|&i| items[i].2).collect();
        let batch = Batch::new(&inputs, f.needs());
        let mut tape = Tape::training();
        let p = f.params().bind(&mut tape);
        let pred = f.forward(&mut tape, &p, &batch, dropout)?;
        let loss = target_loss(&mut tape, cfg.task, cfg.loss, pred, &y, &pseudo, cfg.lambda)?;
        let value = tape.value(loss).item();
        if !value.is_finite() {
            return Ok(f64::NAN);
        }
        let grads = p.collect(&tape.backward(loss)?);
        opt.step(f.params_mut(), &grads)?;
        total += value * chunk.len() as f64;
    }
    Ok(total / items.len().max(1) as f64)
}

/// One shuffled minibatch sweep of g over `D'` with class-weighted BCE.
#[allow(clippy::too_many_arguments)]
fn sweep_g(
    g: &mut Instructor,
    opt: &mut Adam,
    inputs: &[&MolInput],
    dp: &DPrime,
    scaler: &FeatureScaler,
    cfg: &TrainConfig,
    shuffle: &mut ChaCha8Rng,
    dropout: &mut ChaCha8Rng,
) -> Result<f64> {
    let n_obs = dp.c.iter().filter(|&&c| c == 1.0).count();
    let (w1, w0) = class_weights(n_obs, dp.len() - n_obs);
    let mut order: Vec<usize> = (0..dp.len()).collect();
    order.shuffle(shuffle);
    let mut total = 0.0;
    for chunk in order.chunks(cfg.batch_size) {
        let xs: Vec<&MolInput> = chunk.iter().map(|&i| inputs[i]).collect();
        let yf: Vec<f64> = chunk.iter().map(|&i| scaler.y(dp.y[i])).collect();
        let hff: Vec<f64> = chunk.iter().map(|&i| scaler.hf(dp.hf[i])).collect();
        let c: Vec<f64> = chunk.iter().map(|&i| dp.c[i]).collect();
        let w: Vec<f64> = c.iter().map(|&c| if c == 1.0 { w1 } else { w0 }).collect();
        let batch = Batch::new(&xs, g.needs());
        let mut tape = Tape::training();
        let p = g.params().bind(&mut tape);
        let z = g.forward_logits(&mut tape, &p, &batch, &yf, &hff, dropout)?;
        let loss = instructor_loss(&mut tape, z, &c, &w)?;
        let value = tape.value(loss).item();
        if !value.is_finite() {
            return Ok(f64::NAN);
        }
        let grads = p.collect(&tape.backward(loss)?);
        opt.step(g.params_mut(), &grads)?;
        total += value * chunk.len() as f64;
    }
    Ok(total / dp.len().max(1) as f64)
}

fn fit_g(
    g: &mut Instructor,
    inputs: &[&MolInput],
    dp: &DPrime,
    epochs: usize,
    cfg: &TrainConfig,
    shuffle: &mut ChaCha8Rng,
    dropout: &mut ChaCha8Rng,
) -> Result<FeatureScaler> {
    let scaler = FeatureScaler::fit(&dp.y, &dp.hf);
    let mut opt = Adam::new(cfg.lr_g)?;
    for epoch in 0..epochs {
        let loss = sweep_g(g, &mut opt, inputs, dp, &scaler, cfg, shuffle, dropout)?;
        if !loss.is_finite() {
            return Err(TrainError::NonFiniteLoss {
                phase: "warmup g",
                epoch,
                log: Vec::new(),
            });
        }
    }
    Ok(scaler)
}

/// Trains g on a fixed `D'` for `epochs` sweeps from a fresh optimizer,
/// drawing shuffles and dropout from `cfg.seed`. Returns the feature scaler
/// fit on `D'`, which [`Instructor::confidences`] needs for new samples.
pub fn fit_instructor(
    g: &mut Instructor,
    inputs: &[&MolInput],
    dp: &DPrime,
    epochs: usize,
    cfg: &TrainConfig,
) -> Result<FeatureScaler> {
    if inputs.len() != dp.len() {
        return Err(TrainError::InvalidConfig(format!(
            "{} inputs for a D' of {}",
            inputs.len(),
            dp.len()
        )));
    }
    let mut rng = Streams::new(cfg.seed);
    fit_g(g, inputs, dp, epochs, cfg, &mut rng.shuffle_g, &mut rng.dropout_g)
}

fn check_widths(needs: Needs, sets: &[&[&MolInput]]) -> Result<()> {
    if let Some(width) = needs.fingerprint {
        for set in sets {
            if let Some(m) = set.iter().find(|m| m.fp_width() != width) {
                return Err(TrainError::InvalidConfig(format!(
                    "model expects {width}-bit fingerprints, data has {}",
                    m.fp_width()
                )));
            }
        }
    }
    Ok(())
}

fn labeled_items(set: &LabeledSet) -> Vec<Item<'_>> {
    set.inputs.iter().zip(&set.y).map(|(m, &y)| (m, y, false)).collect()
}

/// Supervised warmup of f on the training set. Keeps the parameters (and
/// optimizer moments) with the best validation score; with zero epochs f is
/// returned unchanged. Returns the validation score of the kept state and
/// the optimizer to continue with.
fn warmup_f(f: &mut TargetModel, data: &TrainData, cfg: &TrainConfig, rng: &mut Streams) -> Result<(f64, Adam)> {
    let items = labeled_items(&data.train);
    let mut opt = Adam::new(cfg.lr_f)?;
    let mut best: Option<(f64, ParamStore, Adam)> = None;
    for epoch in 0..cfg.warmup_epochs_f {
        let loss = sweep_f(f, &mut opt, &items, cfg, &mut rng.shuffle_f, &mut rng.dropout_f)?;
        if !loss.is_finite() {
            return Err(TrainError::NonFiniteLoss {
                phase: "warmup f",
                epoch,
                log: Vec::new(),
            });
        }
        let s = normalized(cfg.metric, evaluate(f, &data.val, cfg.metric)?);
        if best.as_ref().is_none_or(|(b, _, _)| s < *b) {
            best = Some((s, f.params().clone(), opt.clone()));
        }
    }
    if let Some((_, params, kept)) = best {
        *f.params_mut() = params;
        opt = kept;
    }
    if cfg.fresh_optimizer {
        opt = Adam::new(cfg.lr_f)?;
    }
    Ok((evaluate(f, &data.val, cfg.metric)?, opt))
}

fn subsample_pool(data: &TrainData, cap: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    if data.pool.len() <= cap {
        return (0..data.pool.len()).collect();
    }
    let mut chosen = index::sample(rng, data.pool.len(), cap).into_vec();
    chosen.sort_unstable();
    chosen
}

struct Best {
    score: f64,
    epoch: Option<usize>,
    f: ParamStore,
    g: Option<ParamStore>,
}

impl Best {
    fn offer(&mut self, score: f64, epoch: usize, f: &TargetModel, g: Option<&Instructor>) {
        if score < self.score {
            self.score = score;
            self.epoch = Some(epoch);
            self.f = f.params().clone();
            self.g = g.map(|g| g.params().clone());
        }
    }
}

fn wall_ms(cfg: &TrainConfig, start: Instant) -> u64 {
    if cfg.record_wall_time {
        start.elapsed().as_millis() as u64
    } else {
        0
    }
}

fn test_metric(f: &TargetModel, data: &TrainData, cfg: &TrainConfig) -> Result<Option<f64>> {
    match (&data.test, cfg.eval_test_each_epoch) {
        (Some(test), true) => Ok(Some(evaluate(f, test, cfg.metric)?)),
        _ => Ok(None),
    }
}

fn check_inputs(strategy: Strategy, data: &TrainData, cfg: &TrainConfig) -> Result<()> {
    cfg.validate()?;
    data.train.check("training set")?;
    data.val.check("validation set")?;
    if let Some(test) = &data.test {
        test.check("test set")?;
    }
    if strategy == Strategy::PiModel && data.pool.is_empty() {
        log::warn!("pi_model without unlabeled molecules only sees the labeled consistency term");
    }
    Ok(())
}

/// Runs `strategy` end to end: warmup, then the main loop.
pub fn train(
    strategy: Strategy,
    target: TargetSpec,
    instructor: InstructorSpec,
    data: &TrainData,
    cfg: &TrainConfig,
) -> Result<RunOutput> {
    if strategy.uses_instructor() {
        train_semimol_family(strategy, target, instructor, data, cfg)
    } else {
        train_baseline(strategy, target, data, cfg)
    }
}

/// Instructor-guided pseudo-labeling. `Semimol` lowers the threshold with
/// the curriculum, `FixedThreshold` keeps it, `Percentile` admits a ramped
/// top fraction instead.
pub fn train_semimol(
    target: TargetSpec,
    instructor: InstructorSpec,
    data: &TrainData,
    cfg: &TrainConfig,
) -> Result<RunOutput> {
    train_semimol_family(Strategy::Semimol, target, instructor, data, cfg)
}

fn train_semimol_family(
    strategy: Strategy,
    target: TargetSpec,
    instructor: InstructorSpec,
    data: &TrainData,
    cfg: &TrainConfig,
) -> Result<RunOutput> {
    check_inputs(strategy, data, cfg)?;
    let mut rng = Streams::new(cfg.seed);
    let mut f = TargetModel::new(target, &mut rng.init_f)?;
    let mut g = Instructor::new(instructor, &mut rng.init_g)?;

    let pool_indices = subsample_pool(data, cfg.pool_cap, &mut rng.pool);
    let pool_inputs: Vec<&MolInput> = pool_indices.iter().map(|&i| &data.pool[i]).collect();
    let train_inputs = data.train.refs();
    let d_prime_inputs: Vec<&MolInput> = train_inputs.iter().chain(&pool_inputs).copied().collect();
    check_widths(f.needs(), &[&d_prime_inputs, &data.val.refs()])?;
    check_widths(g.needs(), &[&d_prime_inputs])?;

    let (warmup_val, mut opt_f) = warmup_f(&mut f, data, cfg, &mut rng)?;
    let mut pool = PseudoPool::default();
    assign_pseudo_labels(&f, &pool_inputs, &mut pool, 0, cfg.k, cfg.task)?;
    {
        let dp = build_d_prime(&f, &data.train, &pool_inputs, &pool, cfg)?;
        fit_g(
            &mut g,
            &d_prime_inputs,
            &dp,
            cfg.warmup_epochs_g,
            cfg,
            &mut rng.shuffle_g,
            &mut rng.dropout_g,
        )?;
    }

    let mut opt_g = Adam::new(cfg.lr_g)?;
    let mut state = CurriculumState::new(cfg.gamma, cfg.delta_gamma, cfg.gamma_min, cfg.k);
    let mut best = Best {
        score: normalized(cfg.metric, warmup_val),
        epoch: None,
        f: f.params().clone(),
        g: Some(g.params().clone()),
    };
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut dumps = Vec::new();
    let mut trace = Vec::new();
    let n = data.train.len();

    for epoch in 0..cfg.epochs {
        let start = Instant::now();
        assign_pseudo_labels(&f, &pool_inputs, &mut pool, epoch, cfg.k, cfg.task)?;
        let dp = build_d_prime(&f, &data.train, &pool_inputs, &pool, cfg)?;
        let (p, scaler) = score_confidences(&g, &d_prime_inputs, &dp)?;
        for (s, &pi) in pool.samples.iter_mut().zip(&p[n..]) {
            s.p = pi;
        }
        let loss_g = sweep_g(
            &mut g,
            &mut opt_g,
            &d_prime_inputs,
            &dp,
            &scaler,
            cfg,
            &mut rng.shuffle_g,
            &mut rng.dropout_g,
        )?;
        if !loss_g.is_finite() {
            return Err(TrainError::NonFiniteLoss {
                phase: "instructor",
                epoch,
                log,
            });
        }

        let (gamma, admitted) = match strategy {
            Strategy::Percentile => {
                let q = percentile_fraction(cfg.percentile_start, epoch, cfg.epochs);
                let admitted = percentile_admission(&pool.samples, q);
                let cutoff = admitted.iter().map(|&i| pool.samples[i].p).reduce(f64::min);
                (cutoff, admitted)
            }
            _ => (
                Some(state.gamma),
                build_hybrid_set(n, &pool.samples, state.gamma).admitted,
            ),
        };
        if cfg.dump_epochs.contains(&epoch) {
            let mut flags = vec![false; pool.len()];
            admitted.iter().for_each(|&i| flags[i] = true);
            dumps.push(PseudoDump {
                epoch,
                gamma,
                samples: pool.samples.clone(),
                admitted: flags,
            });
        }

        let mut items = labeled_items(&data.train);
        items.extend(admitted.iter().map(|&i| (pool_inputs[i], pool.samples[i].y_hat, true)));
        let loss_f = sweep_f(&mut f, &mut opt_f, &items, cfg, &mut rng.shuffle_f, &mut rng.dropout_f)?;
        if !loss_f.is_finite() {
            return Err(TrainError::NonFiniteLoss {
                phase: "target",
                epoch,
                log,
            });
        }

        let val = evaluate(&f, &data.val, cfg.metric)?;
        log.push(EpochLog {
            epoch,
            gamma,
            hybrid_size: items.len(),
            loss_f,
            loss_g: Some(loss_g),
            val_metric: val,
            test_metric: test_metric(&f, data, cfg)?,
            wall_ms: wall_ms(cfg, start),
        });
        if strategy == Strategy::Semimol {
            state = curriculum_step(state, val, cfg.metric.lower_is_better());
        }
        best.offer(normalized(cfg.metric, val), epoch, &f, Some(&g));
        if cfg.trace_params {
            trace.push(f.params().flatten());
        }
    }

    let gamma_final = match strategy {
        Strategy::Percentile => log.last().and_then(|r| r.gamma),
        _ => Some(state.gamma),
    };
    *f.params_mut() = best.f;
    if let Some(params) = best.g {
        *g.params_mut() = params;
    }
    Ok(RunOutput {
        strategy,
        f,
        g: Some(g),
        log,
        best_epoch: best.epoch,
        best_val: if cfg.metric.lower_is_better() {
            best.score
        } else {
            -best.score
        },
        warmup_val,
        gamma_final,
        dumps,
        param_trace: trace,
        pool_indices,
    })
}

/// Strategies without an instructor: `Supervised` and `PiModel`.
pub fn train_baseline(
    strategy: Strategy,
    target: TargetSpec,
    data: &TrainData,
    cfg: &TrainConfig,
) -> Result<RunOutput> {
    if strategy.uses_instructor() {
        return Err(TrainError::InvalidConfig(format!(
            "{strategy} needs an instructor; use train"
        )));
    }
    check_inputs(strategy, data, cfg)?;
    let mut rng = Streams::new(cfg.seed);
    let mut f = TargetModel::new(target, &mut rng.init_f)?;
    let pool_indices = if strategy == Strategy::PiModel {
        subsample_pool(data, cfg.pool_cap, &mut rng.pool)
    } else {
        Vec::new()
    };
    let pool_inputs: Vec<&MolInput> = pool_indices.iter().map(|&i| &data.pool[i]).collect();
    check_widths(f.needs(), &[&data.train.refs(), &data.val.refs(), &pool_inputs])?;

    let (warmup_val, mut opt) = warmup_f(&mut f, data, cfg, &mut rng)?;
    let mut best = Best {
        score: normalized(cfg.metric, warmup_val),
        epoch: None,
        f: f.params().clone(),
        g: None,
    };
    let items = labeled_items(&data.train);
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut trace = Vec::new();
    let mut pool_order: Vec<usize> = (0..pool_inputs.len()).collect();

    for epoch in 0..cfg.epochs {
        let start = Instant::now();
        let loss_f = match strategy {
            Strategy::PiModel => {
                pool_order.shuffle(&mut rng.pool);
                sweep_pi(&mut f, &mut opt, &items, &pool_inputs, &pool_order, cfg, &mut rng)?
            }
            _ => sweep_f(&mut f, &mut opt, &items, cfg, &mut rng.shuffle_f, &mut rng.dropout_f)?,
        };
        if !loss_f.is_finite() {
            return Err(TrainError::NonFiniteLoss {
                phase: "target",
                epoch,
                log,
            });
        }
        let val = evaluate(&f, &data.val, cfg.metric)?;
        log.push(EpochLog {
            epoch,
            gamma: None,
            hybrid_size: items.len() + pool_inputs.len(),
            loss_f,
            loss_g: None,
            val_metric: val,
            test_metric: test_metric(&f, data, cfg)?,
            wall_ms: wall_ms(cfg, start),
        });
        best.offer(normalized(cfg.metric, val), epoch, &f, None);
        if cfg.trace_params {
            trace.push(f.params().flatten());
        }
    }

    *f.params_mut() = best.f;
    Ok(RunOutput {
        strategy,
        f,
        g: None,
        log,
        best_epoch: best.epoch,
        best_val: if cfg.metric.lower_is_better() {
            best.score
        } else {
            -best.score
        },
        warmup_val,
        gamma_final: None,
        dumps: Vec::new(),
        param_trace: trace,
        pool_indices,
    })
}

/// One π-model sweep: each labeled minibatch is joined by an equally sized
/// slice of the pool; two dropout passes over the joined batch add a
/// consistency penalty to the supervised loss.
fn sweep_pi(
    f: &mut TargetModel,
    opt: &mut Adam,
    items: &[Item],
    pool: &[&MolInput],
    pool_order: &[usize],
    cfg: &TrainConfig,
    rng: &mut Streams,
) -> Result<f64> {
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.shuffle(&mut rng.shuffle_f);
    let mut cursor = 0;
    let mut total = 0.0;
    for chunk in order.chunks(cfg.batch_size) {
        let mut inputs: Vec<&MolInput> = chunk.iter().map(|&i| items[i].0).collect();
        let y: Vec<f64> = chunk.iter().map(|&i| items[i].1).collect();
        for _ in 0..chunk.len().min(pool.len()) {
            inputs.push(pool[pool_order[cursor % pool.len()]]);
            cursor += 1;
        }
        let batch = Batch::new(&inputs, f.needs());
        let mut tape = Tape::training();
        let p = f.params().bind(&mut tape);
        let first = f.forward(&mut tape, &p, &batch, &mut rng.dropout_f)?;
        let second = f.forward(&mut tape, &p, &batch, &mut rng.dropout_f)?;
        let labeled: Vec<usize> = (0..chunk.len()).collect();
        let sup_pred = tape.gather_rows(first, &labeled);
        let sup = batch_loss(&mut tape, cfg.task, cfg.loss, sup_pred, &y)?;
        let cons = tape.mse(first, second)?;
        let cons = tape.scale(cons, cfg.consistency_weight);
        let loss = tape.add(sup, cons)?;
        let value = tape.value(loss).item();
        if !value.is_finite() {
            return Ok(f64::NAN);
        }
        let grads = p.collect(&tape.backward(loss)?);
        opt.step(f.params_mut(), &grads)?;
        total += value * chunk.len() as f64;
    }
    Ok(total / items.len().max(1) as f64)
}

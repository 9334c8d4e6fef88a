use ndcore::{sigmoid, BoundParams, ParamStore, Tape, Tensor, Var};
use rand::rngs::mock::StepRng;
use rand::RngCore;

use crate::error::{ModelError, Result};
use crate::input::{Batch, MolInput, Needs};
use crate::layers::{Encoder, Linear, Mlp};
use crate::spec::InstructorSpec;
use crate::target::EVAL_CHUNK;

/// Loss features are clamped to this magnitude before standardization.
pub const HF_CLAMP: f64 = 1e6;

/// Standardizes the label and loss features with statistics of one set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureScaler {
    pub y_mean: f64,
    pub y_sd: f64,
    pub hf_mean: f64,
    pub hf_sd: f64,
}

fn mean_sd(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count().max(1) as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    (mean, if sd > 1e-12 { sd } else { 1.0 })
}

fn clamp_hf(h: f64) -> f64 {
    if h.is_nan() {
        HF_CLAMP
    } else {
        h.clamp(-HF_CLAMP, HF_CLAMP)
    }
}

impl FeatureScaler {
    pub fn fit(y: &[f64], hf: &[f64]) -> Self {
        let (y_mean, y_sd) = mean_sd(y.iter().copied());
        let (hf_mean, hf_sd) = mean_sd(hf.iter().map(|&h| clamp_hf(h)));
        FeatureScaler {
            y_mean,
            y_sd,
            hf_mean,
            hf_sd,
        }
    }

    pub fn identity() -> Self {
        FeatureScaler {
            y_mean: 0.0,
            y_sd: 1.0,
            hf_mean: 0.0,
            hf_sd: 1.0,
        }
    }

    pub fn y(&self, y: f64) -> f64 {
        (y - self.y_mean) / self.y_sd
    }

    pub fn hf(&self, h: f64) -> f64 {
        (clamp_hf(h) - self.hf_mean) / self.hf_sd
    }
}

/// The confidence model g: `p = sigmoid(MLP([enc(x) | y' | H_f]))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instructor {
    spec: InstructorSpec,
    params: ParamStore,
    encoder: Encoder,
    fusion: Mlp,
}

fn fusion_dims(spec: &InstructorSpec) -> Vec<usize> {
    let mut dims = vec![spec.encoder.out_dim() + 2];
    dims.extend(std::iter::repeat_n(spec.fusion_hidden, spec.fusion_layers - 1));
    dims.push(1);
    dims
}

impl Instructor {
    pub fn new(spec: InstructorSpec, rng: &mut dyn RngCore) -> Result<Self> {
        spec.validate()?;
        let mut params = ParamStore::new();
        let encoder = Encoder::init(&mut params, "g.encoder", &spec.encoder, rng);
        let fusion = Mlp::init(&mut params, "g.fusion", &fusion_dims(&spec), rng);
        Ok(Instructor {
            spec,
            params,
            encoder,
            fusion,
        })
    }

    pub fn param_count(spec: &InstructorSpec) -> usize {
        let dims = fusion_dims(spec);
        Encoder::param_count(&spec.encoder) + dims.windows(2).map(|w| Linear::param_count(w[0], w[1])).sum::<usize>()
    }

    pub fn spec(&self) -> &InstructorSpec {
        &self.spec
    }

    pub fn layout_tag(&self) -> String {
        format!("instructor:{:?}", self.spec)
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    pub fn fusion(&self) -> &Mlp {
        &self.fusion
    }

    pub fn needs(&self) -> Needs {
        self.encoder.needs()
    }

    /// Logits (`len x 1`) from already standardized `y'` and `H_f`
    /// features. The features enter as constants.
    pub fn forward_logits(
        &self,
        tape: &mut Tape,
        p: &BoundParams,
        batch: &Batch,
        y_feat: &[f64],
        hf_feat: &[f64],
        rng: &mut dyn RngCore,
    ) -> Result<Var> {
        if y_feat.len() != batch.len || hf_feat.len() != batch.len {
            return Err(ModelError::InvalidSpec(format!(
                "feature length {} / {} for a batch of {}",
                y_feat.len(),
                hf_feat.len(),
                batch.len
            )));
        }
        let emb = self.encoder.encode(tape, p, batch, self.spec.dropout, rng)?;
        let y = tape.constant(Tensor::column(y_feat));
        let h = tape.constant(Tensor::column(hf_feat));
        let fused = tape.concat_cols(&[emb, y, h])?;
        self.fusion.forward(tape, p, fused, self.spec.dropout, rng, false)
    }

    /// Eval-mode confidences for raw `y'` and `H_f` values.
    pub fn confidences(&self, inputs: &[&MolInput], y: &[f64], hf: &[f64], scaler: &FeatureScaler) -> Result<Vec<f64>> {
        let mut rng = StepRng::new(0, 0);
        let mut out = Vec::with_capacity(inputs.len());
        for (start, chunk) in (0..inputs.len()).step_by(EVAL_CHUNK).zip(inputs.chunks(EVAL_CHUNK)) {
            let end = start + chunk.len();
            let yf: Vec<f64> = y[start..end].iter().map(|&v| scaler.y(v)).collect();
            let hff: Vec<f64> = hf[start..end].iter().map(|&v| scaler.hf(v)).collect();
            let batch = Batch::new(chunk, self.needs());
            let mut tape = Tape::eval();
            let p = self.params.bind(&mut tape);
            let z = self.forward_logits(&mut tape, &p, &batch, &yf, &hff, &mut rng)?;
            out.extend(tape.value(z).data().iter().map(|&v| sigmoid(v)));
        }
        Ok(out)
    }
}

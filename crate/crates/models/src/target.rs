use ndcore::{BoundParams, ParamStore, Tape, Var};
use rand::rngs::mock::StepRng;
use rand::RngCore;

use crate::error::Result;
use crate::input::{Batch, MolInput, Needs};
use crate::layers::{Encoder, Linear, Mlp};
use crate::spec::TargetSpec;

/// Rows per forward pass when predicting.
pub const EVAL_CHUNK: usize = 256;

/// The molecular property model f.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetModel {
    spec: TargetSpec,
    params: ParamStore,
    encoder: Encoder,
    head: Mlp,
}

fn head_dims(input: usize, fc_layers: usize) -> Vec<usize> {
    let mut dims = vec![input; fc_layers];
    dims.push(1);
    dims
}

impl TargetModel {
    pub fn new(spec: TargetSpec, rng: &mut dyn RngCore) -> Result<Self> {
        spec.validate()?;
        let mut params = ParamStore::new();
        let encoder = Encoder::init(&mut params, "f.encoder", &spec.encoder, rng);
        let head = Mlp::init(
            &mut params,
            "f.head",
            &head_dims(spec.encoder.out_dim(), spec.fc_layers),
            rng,
        );
        Ok(TargetModel {
            spec,
            params,
            encoder,
            head,
        })
    }

    /// Closed-form parameter count for `spec`.
    pub fn param_count(spec: &TargetSpec) -> usize {
        let e = spec.encoder.out_dim();
        Encoder::param_count(&spec.encoder)
            + (spec.fc_layers - 1) * Linear::param_count(e, e)
            + Linear::param_count(e, 1)
    }

    pub fn spec(&self) -> &TargetSpec {
        &self.spec
    }

    /// Stable text identifying the parameter layout, used by checkpoints.
    pub fn layout_tag(&self) -> String {
        format!("target:{:?}", self.spec)
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    pub fn head(&self) -> &Mlp {
        &self.head
    }

    pub fn encoder(&self) -> &Encoder {
        &self.encoder
    }

    pub fn needs(&self) -> Needs {
        self.encoder.needs()
    }

    /// One output per molecule (`len x 1`). Dropout is active only on a
    /// training tape.
    pub fn forward(&self, tape: &mut Tape, p: &BoundParams, batch: &Batch, rng: &mut dyn RngCore) -> Result<Var> {
        let emb = self.encoder.encode(tape, p, batch, self.spec.dropout, rng)?;
        self.head.forward(tape, p, emb, self.spec.dropout, rng, false)
    }

    /// Eval-mode outputs in input order.
    pub fn predict(&self, inputs: &[&MolInput]) -> Result<Vec<f64>> {
        // eval tapes never draw from the generator
        let mut rng = StepRng::new(0, 0);
        let mut out = Vec::with_capacity(inputs.len());
        for chunk in inputs.chunks(EVAL_CHUNK) {
            let batch = Batch::new(chunk, self.needs());
            let mut tape = Tape::eval();
            let p = self.params.bind(&mut tape);
            let y = self.forward(&mut tape, &p, &batch, &mut rng)?;
            out.extend_from_slice(tape.value(y).data());
        }
        Ok(out)
    }
}

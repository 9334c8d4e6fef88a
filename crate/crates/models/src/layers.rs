use chemgraph::{EDGE_DIM, NODE_DIM};
use ndcore::{he_uniform, BoundParams, ParamId, ParamStore, Tape, Tensor, Var};
use rand::RngCore;

use crate::error::Result;
use crate::input::{Batch, GraphBatch, Needs};
use crate::spec::{EncoderSpec, Pooling};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Linear {
    pub w: ParamId,
    pub b: ParamId,
}

impl Linear {
    pub fn init(store: &mut ParamStore, name: &str, fan_in: usize, fan_out: usize, rng: &mut dyn RngCore) -> Self {
        Linear {
            w: store.add(format!("{name}.w"), he_uniform(fan_in, fan_out, rng)),
            b: store.add(format!("{name}.b"), Tensor::zeros(1, fan_out)),
        }
    }

    pub fn forward(&self, tape: &mut Tape, p: &BoundParams, x: Var) -> Result<Var> {
        let y = tape.matmul(x, p.var(self.w))?;
        Ok(tape.add_row(y, p.var(self.b))?)
    }

    pub fn param_count(fan_in: usize, fan_out: usize) -> usize {
        fan_in * fan_out + fan_out
    }
}

/// Linear layers with ReLU (and dropout) between them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mlp {
    pub layers: Vec<Linear>,
}

impl Mlp {
    pub fn init(store: &mut ParamStore, name: &str, dims: &[usize], rng: &mut dyn RngCore) -> Self {
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, w)| Linear::init(store, &format!("{name}.{i}"), w[0], w[1], rng))
            .collect();
        Mlp { layers }
    }

    /// With `activate_last`, the final layer is also followed by ReLU and
    /// dropout (used for encoders); otherwise its output is left linear.
    pub fn forward(
        &self,
        tape: &mut Tape,
        p: &BoundParams,
        mut x: Var,
        dropout: f64,
        rng: &mut dyn RngCore,
        activate_last: bool,
    ) -> Result<Var> {
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            x = layer.forward(tape, p, x)?;
            if i < last || activate_last {
                x = tape.relu(x);
                x = tape.dropout(x, dropout, rng)?;
            }
        }
        Ok(x)
    }
}

/// One GIN layer: `h <- relu(MLP((1 + eps) h + sum_neighbors h + E W_e))`,
/// where `E` holds each atom's summed incident bond features.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GinLayer {
    pub eps: ParamId,
    pub w_edge: ParamId,
    pub mlp: Mlp,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GinEncoder {
    pub input: Linear,
    pub layers: Vec<GinLayer>,
    pub attention: Option<ParamId>,
    pub pooling: Pooling,
}

impl GinEncoder {
    pub fn init(
        store: &mut ParamStore,
        name: &str,
        hidden: usize,
        layers: usize,
        pooling: Pooling,
        rng: &mut dyn RngCore,
    ) -> Self {
        let input = Linear::init(store, &format!("{name}.input"), NODE_DIM, hidden, rng);
        let layers = (0..layers)
            .map(|l| GinLayer {
                eps: store.add(format!("{name}.gin{l}.eps"), Tensor::scalar(0.0)),
                w_edge: store.add(format!("{name}.gin{l}.edge"), he_uniform(EDGE_DIM, hidden, rng)),
                mlp: Mlp::init(store, &format!("{name}.gin{l}.mlp"), &[hidden, hidden, hidden], rng),
            })
            .collect();
        let attention =
            (pooling == Pooling::Attention).then(|| store.add(format!("{name}.attention"), he_uniform(hidden, 1, rng)));
        GinEncoder {
            input,
            layers,
            attention,
            pooling,
        }
    }

    pub fn param_count(hidden: usize, layers: usize, pooling: Pooling) -> usize {
        let per_layer = 1 + EDGE_DIM * hidden + 2 * Linear::param_count(hidden, hidden);
        let attention = if pooling == Pooling::Attention { hidden } else { 0 };
        Linear::param_count(NODE_DIM, hidden) + layers * per_layer + attention
    }

    /// Node embeddings for every atom of the batch.
    pub fn node_embeddings(
        &self,
        tape: &mut Tape,
        p: &BoundParams,
        g: &GraphBatch,
        dropout: f64,
        rng: &mut dyn RngCore,
    ) -> Result<Var> {
        let x = tape.constant(g.x.clone());
        let e = tape.constant(g.edge_sum.clone());
        let mut h = self.input.forward(tape, p, x)?;
        for layer in &self.layers {
            let agg = tape.gin_aggregate(h, p.var(layer.eps), &g.adjacency)?;
            let edge = tape.matmul(e, p.var(layer.w_edge))?;
            let z = tape.add(agg, edge)?;
            h = layer.mlp.forward(tape, p, z, 0.0, rng, true)?;
            h = tape.dropout(h, dropout, rng)?;
        }
        Ok(h)
    }

    pub fn encode(
        &self,
        tape: &mut Tape,
        p: &BoundParams,
        g: &GraphBatch,
        dropout: f64,
        rng: &mut dyn RngCore,
    ) -> Result<Var> {
        let h = self.node_embeddings(tape, p, g, dropout, rng)?;
        Ok(match self.pooling {
            Pooling::Sum => tape.segment_sum(h, &g.segments)?,
            Pooling::Mean => tape.segment_mean(h, &g.segments)?,
            Pooling::Attention => {
                let score = tape.matmul(h, p.var(self.attention.unwrap()))?;
                let weight = tape.segment_softmax(score, &g.segments)?;
                let weighted = tape.mul_col(h, weight)?;
                tape.segment_sum(weighted, &g.segments)?
            }
        })
    }
}

/// A molecule encoder of either kind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Encoder {
    Gin(GinEncoder),
    Fingerprint { mlp: Mlp, width: usize },
}

impl Encoder {
    pub fn init(store: &mut ParamStore, name: &str, spec: &EncoderSpec, rng: &mut dyn RngCore) -> Self {
        match *spec {
            EncoderSpec::Gin {
                hidden,
                layers,
                pooling,
            } => Encoder::Gin(GinEncoder::init(store, name, hidden, layers, pooling, rng)),
            EncoderSpec::FingerprintMlp { width, hidden, layers } => {
                let mut dims = vec![width];
                dims.extend(std::iter::repeat_n(hidden, layers));
                Encoder::Fingerprint {
                    mlp: Mlp::init(store, name, &dims, rng),
                    width,
                }
            }
        }
    }

    pub fn param_count(spec: &EncoderSpec) -> usize {
        match *spec {
            EncoderSpec::Gin {
                hidden,
                layers,
                pooling,
            } => GinEncoder::param_count(hidden, layers, pooling),
            EncoderSpec::FingerprintMlp { width, hidden, layers } => {
                Linear::param_count(width, hidden) + (layers - 1) * Linear::param_count(hidden, hidden)
            }
        }
    }

    pub fn needs(&self) -> Needs {
        match self {
            Encoder::Gin(_) => Needs {
                graph: true,
                fingerprint: None,
            },
            Encoder::Fingerprint { width, .. } => Needs {
                graph: false,
                fingerprint: Some(*width),
            },
        }
    }

    pub fn encode(
        &self,
        tape: &mut Tape,
        p: &BoundParams,
        batch: &Batch,
        dropout: f64,
        rng: &mut dyn RngCore,
    ) -> Result<Var> {
        match self {
            Encoder::Gin(gin) => {
                let g = batch.graph.as_ref().expect("batch built without graph inputs");
                gin.encode(tape, p, g, dropout, rng)
            }
            Encoder::Fingerprint { mlp, .. } => {
                let fp = batch.fingerprints.as_ref().expect("batch built without fingerprints");
                let x = tape.constant(fp.clone());
                mlp.forward(tape, p, x, dropout, rng, true)
            }
        }
    }
}

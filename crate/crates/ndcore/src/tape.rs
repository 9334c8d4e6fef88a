//! Tape-based reverse-mode automatic differentiation over [`Tensor`]s.
//!
//! Every operation appends one node to the tape; node inputs always have
//! smaller indices than the node itself, so a single reverse sweep over the
//! node list visits each recorded op exactly once in topological order.
//!
//! Besides the dense kernels the tape has a few graph-specific ops
//! (neighbor aggregation and per-graph segment reductions) so that a batch
//! of molecules can be processed as one disjoint-union graph.

use std::sync::Arc;

use rand::Rng;

use crate::error::{NdError, Result};
use crate::tensor::{matmul_a_bt_into, matmul_at_b_into, Tensor};

/// Clamp applied to probabilities before taking logs.
pub const PROB_EPS: f64 = 1e-7;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Symmetric adjacency in compressed sparse row form.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Adjacency {
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl Adjacency {
    /// Builds from undirected edges; each edge is inserted in both
    /// directions.
    pub fn from_edges(n_nodes: usize, edges: &[(usize, usize)]) -> Self {
        let mut degree = vec![0usize; n_nodes];
        for &(a, b) in edges {
            degree[a] += 1;
            degree[b] += 1;
        }
        let mut offsets = Vec::with_capacity(n_nodes + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets.clone();
        let mut targets = vec![0; offsets[n_nodes]];
        for &(a, b) in edges {
            targets[fill[a]] = b;
            fill[a] += 1;
            targets[fill[b]] = a;
            fill[b] += 1;
        }
        Adjacency { offsets, targets }
    }

    pub fn n_nodes(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.targets[self.offsets[node]..self.offsets[node + 1]]
    }
}

/// Contiguous row ranges, one per graph in a batch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segments {
    bounds: Vec<usize>,
}

impl Segments {
    pub fn from_sizes(sizes: impl IntoIterator<Item = usize>) -> Self {
        let mut bounds = vec![0];
        for s in sizes {
            bounds.push(bounds.last().unwrap() + s);
        }
        Segments { bounds }
    }

    pub fn count(&self) -> usize {
        self.bounds.len() - 1
    }

    pub fn total(&self) -> usize {
        *self.bounds.last().unwrap()
    }

    pub fn range(&self, s: usize) -> std::ops::Range<usize> {
        self.bounds[s]..self.bounds[s + 1]
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    MulCol(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    Sigmoid(Var),
    Sum(Var),
    Mean(Var),
    Sqrt(Var),
    ConcatCols(Vec<Var>),
    GatherRows(Var, Arc<Vec<usize>>),
    Dropout(Var, Vec<f64>),
    GinAggregate {
        h: Var,
        eps: Var,
        adj: Arc<Adjacency>,
    },
    SegmentSum(Var, Arc<Segments>),
    SegmentMean(Var, Arc<Segments>),
    SegmentSoftmax(Var, Arc<Segments>),
    Mse(Var, Var),
    Mae(Var, Var),
    Bce {
        p: Var,
        target: Arc<Vec<f64>>,
        weights: Option<Arc<Vec<f64>>>,
    },
    BceLogits {
        z: Var,
        target: Arc<Vec<f64>>,
        weights: Option<Arc<Vec<f64>>>,
    },
}

#[derive(Debug, Clone)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Records a computation for later differentiation.
#[derive(Debug, Clone)]
pub struct Tape {
    nodes: Vec<Node>,
    training: bool,
}

/// Result of [`Tape::backward`].
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
    shapes: Vec<[usize; 2]>,
}

impl Gradients {
    pub fn get(&self, var: Var) -> Option<&Tensor> {
        self.grads[var.0].as_ref()
    }

    /// Gradient of `var`, or zeros when it is not connected to the loss.
    pub fn wrt(&self, var: Var) -> Tensor {
        match &self.grads[var.0] {
            Some(g) => g.clone(),
            None => {
                let [r, c] = self.shapes[var.0];
                Tensor::zeros(r, c)
            }
        }
    }
}

fn stable_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn check_same(op: &'static str, a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(NdError::ShapeMismatch {
            op,
            left: a.shape(),
            right: b.shape(),
        });
    }
    Ok(())
}

fn weights_ok(op: &'static str, n: usize, target: &[f64], weights: &Option<Arc<Vec<f64>>>) -> Result<()> {
    if target.len() != n || weights.as_ref().is_some_and(|w| w.len() != n) {
        return Err(NdError::ShapeMismatch {
            op,
            left: [n, 1],
            right: [target.len(), 1],
        });
    }
    Ok(())
}

impl Tape {
    pub fn new(training: bool) -> Self {
        Tape {
            nodes: Vec::new(),
            training,
        }
    }

    pub fn training() -> Self {
        Tape::new(true)
    }

    pub fn eval() -> Self {
        Tape::new(false)
    }

    pub fn is_training(&self) -> bool {
        self.training
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, var: Var) -> &Tensor {
        &self.nodes[var.0].value
    }

    fn push(&mut self, value: Tensor, op: Op, inputs: &[Var]) -> Var {
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// A constant input; no gradient is accumulated for it.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad: false,
        });
        Var(self.nodes.len() - 1)
    }

    /// A differentiable leaf.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad: true,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul(self.value(b))?;
        Ok(self.push(value, Op::MatMul(a, b), &[a, b]))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        check_same("add", self.value(a), self.value(b))?;
        let mut value = self.value(a).clone();
        value.add_assign(self.value(b));
        Ok(self.push(value, Op::Add(a, b), &[a, b]))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        check_same("sub", self.value(a), self.value(b))?;
        let bv = self.value(b).data().to_vec();
        let mut value = self.value(a).clone();
        for (x, y) in value.data_mut().iter_mut().zip(bv) {
            *x -= y;
        }
        Ok(self.push(value, Op::Sub(a, b), &[a, b]))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        check_same("mul", self.value(a), self.value(b))?;
        let bv = self.value(b).data().to_vec();
        let mut value = self.value(a).clone();
        for (x, y) in value.data_mut().iter_mut().zip(bv) {
            *x *= y;
        }
        Ok(self.push(value, Op::Mul(a, b), &[a, b]))
    }

    /// `x (n x d) + bias (1 x d)` broadcast over rows.
    pub fn add_row(&mut self, x: Var, bias: Var) -> Result<Var> {
        let (xv, bv) = (self.value(x), self.value(bias));
        if bv.rows() != 1 || bv.cols() != xv.cols() {
            return Err(NdError::ShapeMismatch {
                op: "add_row",
                left: xv.shape(),
                right: bv.shape(),
            });
        }
        let mut value = xv.clone();
        let d = value.cols();
        let b = bv.data().to_vec();
        for row in value.data_mut().chunks_mut(d.max(1)) {
            for (v, bb) in row.iter_mut().zip(&b) {
                *v += bb;
            }
        }
        Ok(self.push(value, Op::AddRow(x, bias), &[x, bias]))
    }

    /// `x (n x d)` scaled row-wise by `col (n x 1)`.
    pub fn mul_col(&mut self, x: Var, col: Var) -> Result<Var> {
        let (xv, cv) = (self.value(x), self.value(col));
        if cv.cols() != 1 || cv.rows() != xv.rows() {
            return Err(NdError::ShapeMismatch {
                op: "mul_col",
                left: xv.shape(),
                right: cv.shape(),
            });
        }
        let mut value = xv.clone();
        let d = value.cols();
        let c = cv.data().to_vec();
        if d > 0 {
            for (row, s) in value.data_mut().chunks_mut(d).zip(c) {
                for v in row {
                    *v *= s;
                }
            }
        }
        Ok(self.push(value, Op::MulCol(x, col), &[x, col]))
    }

    pub fn scale(&mut self, x: Var, factor: f64) -> Var {
        let value = self.value(x).map(|v| v * factor);
        self.push(value, Op::Scale(x, factor), &[x])
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let value = self.value(x).map(|v| v.max(0.0));
        self.push(value, Op::Relu(x), &[x])
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let value = self.value(x).map(stable_sigmoid);
        self.push(value, Op::Sigmoid(x), &[x])
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let value = Tensor::scalar(self.value(x).data().iter().sum());
        self.push(value, Op::Sum(x), &[x])
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let xv = self.value(x);
        let n = xv.len().max(1) as f64;
        let value = Tensor::scalar(xv.data().iter().sum::<f64>() / n);
        self.push(value, Op::Mean(x), &[x])
    }

    /// `sqrt(x + eps)` elementwise.
    pub fn sqrt_eps(&mut self, x: Var, eps: f64) -> Var {
        let value = self.value(x).map(|v| (v + eps).max(0.0).sqrt());
        self.push(value, Op::Sqrt(x), &[x])
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let rows = self.value(parts[0]).rows();
        for &p in parts {
            if self.value(p).rows() != rows {
                return Err(NdError::ShapeMismatch {
                    op: "concat_cols",
                    left: self.value(parts[0]).shape(),
                    right: self.value(p).shape(),
                });
            }
        }
        let cols: usize = parts.iter().map(|&p| self.value(p).cols()).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for &p in parts {
                data.extend_from_slice(self.value(p).row_slice(r));
            }
        }
        let value = Tensor::new(rows, cols, data)?;
        Ok(self.push(value, Op::ConcatCols(parts.to_vec()), parts))
    }

    pub fn gather_rows(&mut self, x: Var, rows: &[usize]) -> Var {
        let xv = self.value(x);
        let d = xv.cols();
        let mut data = Vec::with_capacity(rows.len() * d);
        for &r in rows {
            data.extend_from_slice(xv.row_slice(r));
        }
        let value = Tensor::new(rows.len(), d, data).unwrap();
        self.push(value, Op::GatherRows(x, Arc::new(rows.to_vec())), &[x])
    }

    /// Inverted dropout in training mode, identity in eval mode.
    pub fn dropout<R: Rng + ?Sized>(&mut self, x: Var, rate: f64, rng: &mut R) -> Result<Var> {
        if !(0.0..1.0).contains(&rate) {
            return Err(NdError::InvalidRate(format!("dropout rate {rate} outside [0, 1)")));
        }
        if !self.training || rate == 0.0 {
            return Ok(x);
        }
        let keep = 1.0 / (1.0 - rate);
        let mask: Vec<f64> = (0..self.value(x).len())
            .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep })
            .collect();
        let mut value = self.value(x).clone();
        for (v, m) in value.data_mut().iter_mut().zip(&mask) {
            *v *= m;
        }
        Ok(self.push(value, Op::Dropout(x, mask), &[x]))
    }

    /// GIN aggregation `(1 + eps) * h + sum over neighbors of h`, with `eps`
    /// a learnable `1 x 1` scalar.
    pub fn gin_aggregate(&mut self, h: Var, eps: Var, adj: &Arc<Adjacency>) -> Result<Var> {
        let hv = self.value(h);
        if hv.rows() != adj.n_nodes() || self.value(eps).shape() != [1, 1] {
            return Err(NdError::ShapeMismatch {
                op: "gin_aggregate",
                left: hv.shape(),
                right: [adj.n_nodes(), 1],
            });
        }
        let self_w = 1.0 + self.value(eps).item();
        let d = hv.cols();
        let mut out = vec![0.0; hv.len()];
        for i in 0..hv.rows() {
            let row = &mut out[i * d..(i + 1) * d];
            for (o, &v) in row.iter_mut().zip(hv.row_slice(i)) {
                *o = self_w * v;
            }
            for &nb in adj.neighbors(i) {
                for (o, &v) in row.iter_mut().zip(hv.row_slice(nb)) {
                    *o += v;
                }
            }
        }
        let value = Tensor::new(hv.rows(), d, out)?;
        Ok(self.push(
            value,
            Op::GinAggregate {
                h,
                eps,
                adj: Arc::clone(adj),
            },
            &[h, eps],
        ))
    }

    fn check_segments(&self, op: &'static str, x: Var, seg: &Segments) -> Result<()> {
        if self.value(x).rows() != seg.total() {
            return Err(NdError::ShapeMismatch {
                op,
                left: self.value(x).shape(),
                right: [seg.total(), 1],
            });
        }
        Ok(())
    }

    /// Per-segment row sums: `(n x d) -> (segments x d)`.
    pub fn segment_sum(&mut self, x: Var, seg: &Arc<Segments>) -> Result<Var> {
        self.check_segments("segment_sum", x, seg)?;
        let xv = self.value(x);
        let d = xv.cols();
        let mut out = vec![0.0; seg.count() * d];
        for s in 0..seg.count() {
            let row = &mut out[s * d..(s + 1) * d];
            for r in seg.range(s) {
                for (o, &v) in row.iter_mut().zip(xv.row_slice(r)) {
                    *o += v;
                }
            }
        }
        let value = Tensor::new(seg.count(), d, out)?;
        Ok(self.push(value, Op::SegmentSum(x, Arc::clone(seg)), &[x]))
    }

    /// Per-segment row means; empty segments yield zeros.
    pub fn segment_mean(&mut self, x: Var, seg: &Arc<Segments>) -> Result<Var> {
        self.check_segments("segment_mean", x, seg)?;
        let xv = self.value(x);
        let d = xv.cols();
        let mut out = vec![0.0; seg.count() * d];
        for s in 0..seg.count() {
            let range = seg.range(s);
            let inv = 1.0 / range.len().max(1) as f64;
            let row = &mut out[s * d..(s + 1) * d];
            for r in range {
                for (o, &v) in row.iter_mut().zip(xv.row_slice(r)) {
                    *o += v * inv;
                }
            }
        }
        let value = Tensor::new(seg.count(), d, out)?;
        Ok(self.push(value, Op::SegmentMean(x, Arc::clone(seg)), &[x]))
    }

    /// Softmax of an `n x 1` score column within each segment.
    pub fn segment_softmax(&mut self, x: Var, seg: &Arc<Segments>) -> Result<Var> {
        self.check_segments("segment_softmax", x, seg)?;
        let xv = self.value(x);
        if xv.cols() != 1 {
            return Err(NdError::ShapeMismatch {
                op: "segment_softmax",
                left: xv.shape(),
                right: [xv.rows(), 1],
            });
        }
        let scores = xv.data();
        let mut out = vec![0.0; scores.len()];
        for s in 0..seg.count() {
            let range = seg.range(s);
            if range.is_empty() {
                continue;
            }
            let max = scores[range.clone()].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for r in range.clone() {
                out[r] = (scores[r] - max).exp();
                total += out[r];
            }
            for r in range {
                out[r] /= total;
            }
        }
        let value = Tensor::new(scores.len(), 1, out)?;
        Ok(self.push(value, Op::SegmentSoftmax(x, Arc::clone(seg)), &[x]))
    }

    pub fn mse(&mut self, pred: Var, target: Var) -> Result<Var> {
        let (p, t) = (self.value(pred), self.value(target));
        check_same("mse", p, t)?;
        let n = p.len().max(1) as f64;
        let v = p
            .data()
            .iter()
            .zip(t.data())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / n;
        Ok(self.push(Tensor::scalar(v), Op::Mse(pred, target), &[pred, target]))
    }

    pub fn mae(&mut self, pred: Var, target: Var) -> Result<Var> {
        let (p, t) = (self.value(pred), self.value(target));
        check_same("mae", p, t)?;
        let n = p.len().max(1) as f64;
        let v = p.data().iter().zip(t.data()).map(|(a, b)| (a - b).abs()).sum::<f64>() / n;
        Ok(self.push(Tensor::scalar(v), Op::Mae(pred, target), &[pred, target]))
    }

    /// `sqrt(mse + eps)`: differentiable at zero error.
    pub fn rmse(&mut self, pred: Var, target: Var, eps: f64) -> Result<Var> {
        let m = self.mse(pred, target)?;
        Ok(self.sqrt_eps(m, eps))
    }

    /// Mean (optionally weighted) binary cross-entropy of probabilities,
    /// clamped to `[PROB_EPS, 1 - PROB_EPS]`.
    pub fn bce(&mut self, p: Var, target: &[f64], weights: Option<&[f64]>) -> Result<Var> {
        let pv = self.value(p);
        let target = Arc::new(target.to_vec());
        let weights = weights.map(|w| Arc::new(w.to_vec()));
        weights_ok("bce", pv.len(), &target, &weights)?;
        let n = pv.len().max(1) as f64;
        let mut total = 0.0;
        for (i, (&pr, &c)) in pv.data().iter().zip(target.iter()).enumerate() {
            let q = pr.clamp(PROB_EPS, 1.0 - PROB_EPS);
            let w = weights.as_ref().map_or(1.0, |w| w[i]);
            total -= w * (c * q.ln() + (1.0 - c) * (1.0 - q).ln());
        }
        Ok(self.push(Tensor::scalar(total / n), Op::Bce { p, target, weights }, &[p]))
    }

    /// Mean (optionally weighted) binary cross-entropy on logits.
    pub fn bce_with_logits(&mut self, z: Var, target: &[f64], weights: Option<&[f64]>) -> Result<Var> {
        let zv = self.value(z);
        let target = Arc::new(target.to_vec());
        let weights = weights.map(|w| Arc::new(w.to_vec()));
        weights_ok("bce_with_logits", zv.len(), &target, &weights)?;
        let n = zv.len().max(1) as f64;
        let mut total = 0.0;
        for (i, (&x, &c)) in zv.data().iter().zip(target.iter()).enumerate() {
            let w = weights.as_ref().map_or(1.0, |w| w[i]);
            total += w * bce_logit_term(x, c);
        }
        Ok(self.push(Tensor::scalar(total / n), Op::BceLogits { z, target, weights }, &[z]))
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let shape = self.value(loss).shape();
        if shape != [1, 1] {
            return Err(NdError::NotScalar(shape));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(Tensor::scalar(1.0));
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if node.requires_grad {
                self.propagate(&node.op, &node.value, &g, &mut grads);
            }
            grads[i] = Some(g);
        }
        grads.resize(self.nodes.len(), None);
        Ok(Gradients {
            grads,
            shapes: self.nodes.iter().map(|n| n.value.shape()).collect(),
        })
    }

    fn wants(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn accumulate(&self, grads: &mut [Option<Tensor>], v: Var, delta: Tensor) {
        match &mut grads[v.0] {
            Some(g) => g.add_assign(&delta),
            slot @ None => *slot = Some(delta),
        }
    }

    fn accumulate_with(&self, grads: &mut [Option<Tensor>], v: Var, f: impl FnOnce(&mut [f64])) {
        let slot = &mut grads[v.0];
        if slot.is_none() {
            let [r, c] = self.nodes[v.0].value.shape();
            *slot = Some(Tensor::zeros(r, c));
        }
        f(slot.as_mut().unwrap().data_mut());
    }

    fn propagate(&self, op: &Op, out: &Tensor, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let gd = g.data();
        match op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let (m, k, n) = (av.rows(), av.cols(), bv.cols());
                if self.wants(*a) {
                    self.accumulate_with(grads, *a, |d| matmul_a_bt_into(gd, bv.data(), d, m, n, k));
                }
                if self.wants(*b) {
                    self.accumulate_with(grads, *b, |d| matmul_at_b_into(av.data(), gd, d, m, k, n));
                }
            }
            Op::Add(a, b) => {
                for v in [*a, *b] {
                    if self.wants(v) {
                        self.accumulate(grads, v, g.clone());
                    }
                }
            }
            Op::Sub(a, b) => {
                if self.wants(*a) {
                    self.accumulate(grads, *a, g.clone());
                }
                if self.wants(*b) {
                    self.accumulate(grads, *b, g.map(|v| -v));
                }
            }
            Op::Mul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                if self.wants(*a) {
                    self.accumulate_with(grads, *a, |d| {
                        for ((x, &gg), &y) in d.iter_mut().zip(gd).zip(bv.data()) {
                            *x += gg * y;
                        }
                    });
                }
                if self.wants(*b) {
                    self.accumulate_with(grads, *b, |d| {
                        for ((x, &gg), &y) in d.iter_mut().zip(gd).zip(av.data()) {
                            *x += gg * y;
                        }
                    });
                }
            }
            Op::AddRow(x, bias) => {
                if self.wants(*x) {
                    self.accumulate(grads, *x, g.clone());
                }
                if self.wants(*bias) {
                    let cols = g.cols();
                    self.accumulate_with(grads, *bias, |d| {
                        if cols > 0 {
                            for row in gd.chunks(cols) {
                                for (x, &v) in d.iter_mut().zip(row) {
                                    *x += v;
                                }
                            }
                        }
                    });
                }
            }
            Op::MulCol(x, col) => {
                let (xv, cv) = (self.value(*x), self.value(*col));
                let cols = xv.cols();
                if self.wants(*x) {
                    self.accumulate_with(grads, *x, |d| {
                        for r in 0..xv.rows() {
                            let s = cv.data()[r];
                            for c in 0..cols {
                                d[r * cols + c] += gd[r * cols + c] * s;
                            }
                        }
                    });
                }
                if self.wants(*col) {
                    self.accumulate_with(grads, *col, |d| {
                        for r in 0..xv.rows() {
                            let mut acc = 0.0;
                            for c in 0..cols {
                                acc += gd[r * cols + c] * xv.data()[r * cols + c];
                            }
                            d[r] += acc;
                        }
                    });
                }
            }
            Op::Scale(x, f) => {
                if self.wants(*x) {
                    self.accumulate(grads, *x, g.map(|v| v * f));
                }
            }
            Op::Relu(x) => {
                if self.wants(*x) {
                    let xv = self.value(*x);
                    self.accumulate_with(grads, *x, |d| {
                        for ((o, &gg), &v) in d.iter_mut().zip(gd).zip(xv.data()) {
                            if v > 0.0 {
                                *o += gg;
                            }
                        }
                    });
                }
            }
            Op::Sigmoid(x) => {
                if self.wants(*x) {
                    self.accumulate_with(grads, *x, |d| {
                        for ((o, &gg), &s) in d.iter_mut().zip(gd).zip(out.data()) {
                            *o += gg * s * (1.0 - s);
                        }
                    });
                }
            }
            Op::Sum(x) => {
                if self.wants(*x) {
                    let [r, c] = self.value(*x).shape();
                    self.accumulate(grads, *x, Tensor::filled(r, c, gd[0]));
                }
            }
            Op::Mean(x) => {
                if self.wants(*x) {
                    let [r, c] = self.value(*x).shape();
                    let n = (r * c).max(1) as f64;
                    self.accumulate(grads, *x, Tensor::filled(r, c, gd[0] / n));
                }
            }
            Op::Sqrt(x) => {
                if self.wants(*x) {
                    self.accumulate_with(grads, *x, |d| {
                        for ((o, &gg), &s) in d.iter_mut().zip(gd).zip(out.data()) {
                            if s > 0.0 {
                                *o += gg * 0.5 / s;
                            }
                        }
                    });
                }
            }
            Op::ConcatCols(parts) => {
                let total = g.cols();
                let mut offset = 0;
                for &p in parts {
                    let pc = self.value(p).cols();
                    if self.wants(p) {
                        self.accumulate_with(grads, p, |d| {
                            for r in 0..g.rows() {
                                for c in 0..pc {
                                    d[r * pc + c] += gd[r * total + offset + c];
                                }
                            }
                        });
                    }
                    offset += pc;
                }
            }
            Op::GatherRows(x, rows) => {
                if self.wants(*x) {
                    let d_cols = g.cols();
                    self.accumulate_with(grads, *x, |d| {
                        for (k, &r) in rows.iter().enumerate() {
                            for c in 0..d_cols {
                                d[r * d_cols + c] += gd[k * d_cols + c];
                            }
                        }
                    });
                }
            }
            Op::Dropout(x, mask) => {
                if self.wants(*x) {
                    self.accumulate_with(grads, *x, |d| {
                        for ((o, &gg), &m) in d.iter_mut().zip(gd).zip(mask) {
                            *o += gg * m;
                        }
                    });
                }
            }
            Op::GinAggregate { h, eps, adj } => {
                let hv = self.value(*h);
                let cols = hv.cols();
                if self.wants(*h) {
                    let self_w = 1.0 + self.value(*eps).item();
                    self.accumulate_with(grads, *h, |d| {
                        for i in 0..hv.rows() {
                            let row = &mut d[i * cols..(i + 1) * cols];
                            for (o, &gg) in row.iter_mut().zip(&gd[i * cols..(i + 1) * cols]) {
                                *o += self_w * gg;
                            }
                            for &nb in adj.neighbors(i) {
                                for (o, &gg) in row.iter_mut().zip(&gd[nb * cols..(nb + 1) * cols]) {
                                    *o += gg;
                                }
                            }
                        }
                    });
                }
                if self.wants(*eps) {
                    let acc: f64 = hv.data().iter().zip(gd).map(|(a, b)| a * b).sum();
                    self.accumulate(grads, *eps, Tensor::scalar(acc));
                }
            }
            Op::SegmentSum(x, seg) => {
                if self.wants(*x) {
                    let cols = g.cols();
                    self.accumulate_with(grads, *x, |d| {
                        for s in 0..seg.count() {
                            let gs = &gd[s * cols..(s + 1) * cols];
                            for r in seg.range(s) {
                                for (o, &gg) in d[r * cols..(r + 1) * cols].iter_mut().zip(gs) {
                                    *o += gg;
                                }
                            }
                        }
                    });
                }
            }
            Op::SegmentMean(x, seg) => {
                if self.wants(*x) {
                    let cols = g.cols();
                    self.accumulate_with(grads, *x, |d| {
                        for s in 0..seg.count() {
                            let range = seg.range(s);
                            let inv = 1.0 / range.len().max(1) as f64;
                            let gs = &gd[s * cols..(s + 1) * cols];
                            for r in range {
                                for (o, &gg) in d[r * cols..(r + 1) * cols].iter_mut().zip(gs) {
                                    *o += gg * inv;
                                }
                            }
                        }
                    });
                }
            }
            Op::SegmentSoftmax(x, seg) => {
                if self.wants(*x) {
                    let y = out.data();
                    self.accumulate_with(grads, *x, |d| {
                        for s in 0..seg.count() {
                            let range = seg.range(s);
                            let dot: f64 = range.clone().map(|r| y[r] * gd[r]).sum();
                            for r in range {
                                d[r] += y[r] * (gd[r] - dot);
                            }
                        }
                    });
                }
            }
            Op::Mse(p, t) => {
                let (pv, tv) = (self.value(*p), self.value(*t));
                let scale = 2.0 * gd[0] / pv.len().max(1) as f64;
                let diff: Vec<f64> = pv.data().iter().zip(tv.data()).map(|(a, b)| scale * (a - b)).collect();
                if self.wants(*p) {
                    self.accumulate_with(grads, *p, |d| {
                        for (o, v) in d.iter_mut().zip(&diff) {
                            *o += v;
                        }
                    });
                }
                if self.wants(*t) {
                    self.accumulate_with(grads, *t, |d| {
                        for (o, v) in d.iter_mut().zip(&diff) {
                            *o -= v;
                        }
                    });
                }
            }
            Op::Mae(p, t) => {
                let (pv, tv) = (self.value(*p), self.value(*t));
                let scale = gd[0] / pv.len().max(1) as f64;
                let sign: Vec<f64> = pv
                    .data()
                    .iter()
                    .zip(tv.data())
                    .map(|(a, b)| {
                        let e = a - b;
                        if e > 0.0 {
                            scale
                        } else if e < 0.0 {
                            -scale
                        } else {
                            0.0
                        }
                    })
                    .collect();
                if self.wants(*p) {
                    self.accumulate_with(grads, *p, |d| {
                        for (o, v) in d.iter_mut().zip(&sign) {
                            *o += v;
                        }
                    });
                }
                if self.wants(*t) {
                    self.accumulate_with(grads, *t, |d| {
                        for (o, v) in d.iter_mut().zip(&sign) {
                            *o -= v;
                        }
                    });
                }
            }
            Op::Bce { p, target, weights } => {
                if self.wants(*p) {
                    let pv = self.value(*p);
                    let n = pv.len().max(1) as f64;
                    self.accumulate_with(grads, *p, |d| {
                        for (i, (&pr, &c)) in pv.data().iter().zip(target.iter()).enumerate() {
                            if pr <= PROB_EPS || pr >= 1.0 - PROB_EPS {
                                continue;
                            }
                            let w = weights.as_ref().map_or(1.0, |w| w[i]);
                            d[i] += gd[0] * w * (-(c / pr) + (1.0 - c) / (1.0 - pr)) / n;
                        }
                    });
                }
            }
            Op::BceLogits { z, target, weights } => {
                if self.wants(*z) {
                    let zv = self.value(*z);
                    let n = zv.len().max(1) as f64;
                    self.accumulate_with(grads, *z, |d| {
                        for (i, (&x, &c)) in zv.data().iter().zip(target.iter()).enumerate() {
                            let w = weights.as_ref().map_or(1.0, |w| w[i]);
                            d[i] += gd[0] * w * (stable_sigmoid(x) - c) / n;
                        }
                    });
                }
            }
        }
    }
}

/// Cross-entropy of one logit against a 0/1 target.
pub fn bce_logit_term(z: f64, c: f64) -> f64 {
    z.max(0.0) - z * c + (-z.abs()).exp().ln_1p()
}

/// Sigmoid that stays finite for large |x|.
pub fn sigmoid(x: f64) -> f64 {
    stable_sigmoid(x)
}

use std::sync::Arc;

use chemgraph::{featurize, morgan_fingerprint, MolecularGraph, EDGE_DIM, NODE_DIM};
use ndcore::{Adjacency, Segments, Tensor};

/// Precomputed model inputs for one molecule.
#[derive(Debug, Clone, PartialEq)]
pub struct MolInput {
    n_atoms: usize,
    /// `n_atoms x NODE_DIM`, row-major.
    node_features: Vec<f64>,
    /// Per-atom sum of incident edge feature rows, `n_atoms x EDGE_DIM`.
    edge_sum: Vec<f64>,
    edges: Vec<(usize, usize)>,
    fp_bits: Vec<usize>,
    fp_width: usize,
}

impl MolInput {
    pub fn new(graph: &MolecularGraph, fp_radius: usize, fp_width: usize) -> Self {
        let feats = featurize(graph);
        let n = graph.atom_count();
        let mut edge_sum = vec![0.0; n * EDGE_DIM];
        for (bi, bond) in graph.bonds().iter().enumerate() {
            let row = feats.edge_row(bi);
            for atom in [bond.a, bond.b] {
                for (o, v) in edge_sum[atom * EDGE_DIM..(atom + 1) * EDGE_DIM].iter_mut().zip(row) {
                    *o += v;
                }
            }
        }
        let fp = morgan_fingerprint(graph, fp_radius, fp_width);
        MolInput {
            n_atoms: n,
            node_features: feats.node_features,
            edge_sum,
            edges: graph.bonds().iter().map(|b| (b.a, b.b)).collect(),
            fp_bits: fp.ones().collect(),
            fp_width,
        }
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn fp_width(&self) -> usize {
        self.fp_width
    }

    pub fn fp_bits(&self) -> &[usize] {
        &self.fp_bits
    }

    pub fn node_features(&self) -> &[f64] {
        &self.node_features
    }
}

/// Disjoint union of several molecular graphs.
#[derive(Debug, Clone)]
pub struct GraphBatch {
    pub x: Tensor,
    pub edge_sum: Tensor,
    pub adjacency: Arc<Adjacency>,
    pub segments: Arc<Segments>,
}

impl GraphBatch {
    pub fn new(inputs: &[&MolInput]) -> Self {
        let total: usize = inputs.iter().map(|m| m.n_atoms).sum();
        let mut x = Vec::with_capacity(total * NODE_DIM);
        let mut e = Vec::with_capacity(total * EDGE_DIM);
        let mut edges = Vec::new();
        let mut offset = 0;
        for m in inputs {
            x.extend_from_slice(&m.node_features);
            e.extend_from_slice(&m.edge_sum);
            edges.extend(m.edges.iter().map(|&(a, b)| (a + offset, b + offset)));
            offset += m.n_atoms;
        }
        GraphBatch {
            x: Tensor::new(total, NODE_DIM, x).unwrap(),
            edge_sum: Tensor::new(total, EDGE_DIM, e).unwrap(),
            adjacency: Arc::new(Adjacency::from_edges(total, &edges)),
            segments: Arc::new(Segments::from_sizes(inputs.iter().map(|m| m.n_atoms))),
        }
    }
}

/// Inputs for one forward pass; only the parts the model reads are built.
#[derive(Debug, Clone)]
pub struct Batch {
    pub len: usize,
    pub graph: Option<GraphBatch>,
    /// `len x width` 0/1 fingerprint rows.
    pub fingerprints: Option<Tensor>,
}

/// Which input encodings a model consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Needs {
    pub graph: bool,
    pub fingerprint: Option<usize>,
}

impl Needs {
    pub fn union(self, other: Needs) -> Needs {
        Needs {
            graph: self.graph || other.graph,
            fingerprint: self.fingerprint.or(other.fingerprint),
        }
    }
}

impl Batch {
    pub fn new(inputs: &[&MolInput], needs: Needs) -> Self {
        let fingerprints = needs.fingerprint.map(|width| {
            let mut data = vec![0.0; inputs.len() * width];
            for (r, m) in inputs.iter().enumerate() {
                assert_eq!(m.fp_width, width, "fingerprint width differs from the model's");
                for &b in &m.fp_bits {
                    data[r * width + b] = 1.0;
                }
            }
            Tensor::new(inputs.len(), width, data).unwrap()
        });
        Batch {
            len: inputs.len(),
            graph: needs.graph.then(|| GraphBatch::new(inputs)),
            fingerprints,
        }
    }
}

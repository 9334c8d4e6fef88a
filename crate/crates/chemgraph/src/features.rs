//! Node and edge featurization.
//!
//! Node row layout:
//! `[element one-hot (12) | degree one-hot 0..=6 (7) | charge / 2 | aromatic | hydrogens one-hot 0..=4 (5)]`.
//! Edge row layout: `[order one-hot (single, double, triple, aromatic) | in-ring]`.
//! Degrees above 6 and hydrogen counts above 4 fall into the last slot.

use crate::graph::{Element, MolecularGraph};

pub const ELEMENT_SLOTS: usize = 12;
pub const DEGREE_SLOTS: usize = 7;
pub const HYDROGEN_SLOTS: usize = 5;
pub const NODE_DIM: usize = ELEMENT_SLOTS + DEGREE_SLOTS + 1 + 1 + HYDROGEN_SLOTS;
pub const EDGE_DIM: usize = 5;
/// Number of one-hot blocks in a node row.
pub const NODE_ONE_HOT_BLOCKS: usize = 3;

pub const DEGREE_OFFSET: usize = ELEMENT_SLOTS;
pub const CHARGE_OFFSET: usize = DEGREE_OFFSET + DEGREE_SLOTS;
pub const AROMATIC_OFFSET: usize = CHARGE_OFFSET + 1;
pub const HYDROGEN_OFFSET: usize = AROMATIC_OFFSET + 1;
pub const EDGE_RING_OFFSET: usize = 4;

/// Row-major feature matrices for one molecule.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrices {
    pub node_features: Vec<f64>,
    pub edge_features: Vec<f64>,
    pub n_nodes: usize,
    pub n_edges: usize,
    pub d_node: usize,
    pub d_edge: usize,
}

impl FeatureMatrices {
    pub fn node_row(&self, i: usize) -> &[f64] {
        &self.node_features[i * self.d_node..(i + 1) * self.d_node]
    }

    pub fn edge_row(&self, i: usize) -> &[f64] {
        &self.edge_features[i * self.d_edge..(i + 1) * self.d_edge]
    }
}

pub fn featurize(graph: &MolecularGraph) -> FeatureMatrices {
    let n = graph.atom_count();
    let m = graph.bond_count();
    let mut node = vec![0.0; n * NODE_DIM];
    for (i, atom) in graph.atoms().iter().enumerate() {
        let row = &mut node[i * NODE_DIM..(i + 1) * NODE_DIM];
        row[atom.element.index()] = 1.0;
        row[DEGREE_OFFSET + (atom.degree as usize).min(DEGREE_SLOTS - 1)] = 1.0;
        row[CHARGE_OFFSET] = atom.charge as f64 / 2.0;
        row[AROMATIC_OFFSET] = if atom.aromatic { 1.0 } else { 0.0 };
        row[HYDROGEN_OFFSET + (atom.hydrogens as usize).min(HYDROGEN_SLOTS - 1)] = 1.0;
    }
    let mut edge = vec![0.0; m * EDGE_DIM];
    for (i, bond) in graph.bonds().iter().enumerate() {
        let row = &mut edge[i * EDGE_DIM..(i + 1) * EDGE_DIM];
        row[bond.order.index()] = 1.0;
        row[EDGE_RING_OFFSET] = if bond.in_ring { 1.0 } else { 0.0 };
    }
    FeatureMatrices {
        node_features: node,
        edge_features: edge,
        n_nodes: n,
        n_edges: m,
        d_node: NODE_DIM,
        d_edge: EDGE_DIM,
    }
}

/// Slot of `element` within a node row.
pub fn element_slot(element: Element) -> usize {
    element.index()
}

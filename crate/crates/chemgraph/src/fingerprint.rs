//! Extended-connectivity (Morgan-style) fingerprints and Tanimoto similarity.

use crate::error::WidthMismatch;
use crate::graph::MolecularGraph;

pub const DEFAULT_WIDTH: usize = 1024;
pub const DEFAULT_RADIUS: usize = 2;

/// Fixed-width bitset of hashed atom environments.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    words: Vec<u64>,
    width: usize,
    radius: usize,
}

impl Fingerprint {
    pub fn empty(width: usize, radius: usize) -> Self {
        Fingerprint {
            words: vec![0; width.div_ceil(64)],
            width,
            radius,
        }
    }

    /// Builds a fingerprint with the given bits set.
    pub fn from_bits(width: usize, bits: impl IntoIterator<Item = usize>) -> Self {
        let mut fp = Fingerprint::empty(width, 0);
        for b in bits {
            fp.set(b % width);
        }
        fp
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn set(&mut self, bit: usize) {
        self.words[bit / 64] |= 1 << (bit % 64);
    }

    pub fn get(&self, bit: usize) -> bool {
        self.words[bit / 64] >> (bit % 64) & 1 == 1
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Indices of set bits, ascending.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let tz = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + tz)
            })
        })
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }
}

/// splitmix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
fn combine(h: u64, x: u64) -> u64 {
    mix64(h.rotate_left(5) ^ x.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Radius-0 invariant of every atom.
pub fn initial_invariants(graph: &MolecularGraph) -> Vec<u64> {
    graph
        .atoms()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let mut h = 0x2545_f491_4f6c_dd1d;
            h = combine(h, a.element.atomic_number() as u64);
            h = combine(h, a.degree as u64);
            h = combine(h, a.hydrogens as u64);
            h = combine(h, (a.charge as i64) as u64);
            h = combine(h, a.aromatic as u64);
            combine(h, graph.atom_in_ring(i) as u64)
        })
        .collect()
}

/// Environment hashes per radius: `result[r][atom]`.
pub fn environment_hashes(graph: &MolecularGraph, radius: usize) -> Vec<Vec<u64>> {
    let mut layers = vec![initial_invariants(graph)];
    for _ in 0..radius {
        let prev = layers.last().unwrap();
        let next = (0..graph.atom_count())
            .map(|i| {
                let mut env: Vec<(u64, u64)> = graph
                    .neighbors(i)
                    .iter()
                    .map(|&(nb, bi)| (graph.bonds()[bi].order.index() as u64, prev[nb]))
                    .collect();
                env.sort_unstable();
                let mut h = combine(prev[i], env.len() as u64);
                for (order, inv) in env {
                    h = combine(h, order);
                    h = combine(h, inv);
                }
                h
            })
            .collect();
        layers.push(next);
    }
    layers
}

/// `width` must be a power of two of at least 64.
pub fn morgan_fingerprint(graph: &MolecularGraph, radius: usize, width: usize) -> Fingerprint {
    assert!(
        width >= 64 && width.is_power_of_two(),
        "fingerprint width must be a power of two >= 64, got {width}"
    );
    let mut fp = Fingerprint::empty(width, radius);
    for layer in environment_hashes(graph, radius) {
        for h in layer {
            fp.set((h % width as u64) as usize);
        }
    }
    fp
}

/// `|a ∧ b| / |a ∨ b|`, or 1.0 when both are empty.
pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> Result<f64, WidthMismatch> {
    if a.width != b.width {
        return Err(WidthMismatch {
            left: a.width,
            right: b.width,
        });
    }
    let (mut inter, mut union) = (0u32, 0u32);
    for (x, y) in a.words.iter().zip(&b.words) {
        inter += (x & y).count_ones();
        union += (x | y).count_ones();
    }
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::parse_smiles;
    use proptest::prelude::*;

    fn fp(s: &str, r: usize) -> Fingerprint {
        morgan_fingerprint(&parse_smiles(s).unwrap(), r, 1024)
    }

    #[test]
    fn radius_zero_distinguishes_elements() {
        let c = fp("C", 0);
        let n = fp("N", 0);
        assert_eq!(c.count_ones(), 1);
        assert_eq!(n.count_ones(), 1);
        assert_ne!(c, n);
    }

    #[test]
    fn determinism_and_relabeling() {
        assert_eq!(fp("CCO", 2), fp("CCO", 2));
        assert_eq!(fp("CCO", 2), fp("OCC", 2));
        assert_eq!(fp("c1ccccc1O", 3), fp("Oc1ccccc1", 3));
        assert_ne!(fp("CCO", 2), fp("CCN", 2));
    }

    #[test]
    fn relabeling_matches_environment_multisets() {
        let a = parse_smiles("CCO").unwrap();
        let b = parse_smiles("OCC").unwrap();
        for (la, lb) in environment_hashes(&a, 2).into_iter().zip(environment_hashes(&b, 2)) {
            let (mut la, mut lb) = (la, lb);
            la.sort_unstable();
            lb.sort_unstable();
            assert_eq!(la, lb);
        }
    }

    #[test]
    fn tanimoto_examples() {
        let a = fp("c1ccccc1CO", 2);
        assert_eq!(tanimoto(&a, &a).unwrap(), 1.0);
        let x = Fingerprint::from_bits(64, [1, 2, 3]);
        let y = Fingerprint::from_bits(64, [2, 3, 4]);
        assert_eq!(tanimoto(&x, &y).unwrap(), 0.5);
        let z = Fingerprint::from_bits(64, [10, 11]);
        assert_eq!(tanimoto(&x, &z).unwrap(), 0.0);
        let e = Fingerprint::empty(64, 0);
        assert_eq!(tanimoto(&e, &e).unwrap(), 1.0);
        assert!(tanimoto(&x, &Fingerprint::empty(128, 0)).is_err());
    }

    #[test]
    fn ones_iterates_set_bits() {
        let x = Fingerprint::from_bits(256, [0, 63, 64, 200]);
        assert_eq!(x.ones().collect::<Vec<_>>(), vec![0, 63, 64, 200]);
    }

    fn bitset_strategy() -> impl Strategy<Value = Fingerprint> {
        proptest::collection::vec(0usize..128, 0..40).prop_map(|b| Fingerprint::from_bits(128, b))
    }

    proptest! {
        #[test]
        fn tanimoto_symmetric_bounded_reflexive(a in bitset_strategy(), b in bitset_strategy()) {
            let ab = tanimoto(&a, &b).unwrap();
            let ba = tanimoto(&b, &a).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert_eq!(tanimoto(&a, &a).unwrap(), 1.0);
        }
    }
}

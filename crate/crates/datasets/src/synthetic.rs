//! Random drug-like molecules and motif-count regression tasks.

use std::collections::VecDeque;

use chemgraph::{write_smiles, AtomSpec, BondOrder, Element, GraphBuilder, MolecularGraph};
use rand::Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorConfig {
    pub min_heavy: usize,
    pub max_heavy: usize,
    /// Chance that a molecule is seeded with a benzene ring.
    pub aromatic_start: f64,
    /// Per-growth-step chance of attaching an amide `C(=O)N` unit.
    pub amide: f64,
    /// Per-growth-step chance of attaching a hydroxyl oxygen.
    pub hydroxyl: f64,
    /// Per-growth-step chance of attaching a phenyl ring.
    pub phenyl: f64,
    /// Chance of one aliphatic ring closure per molecule.
    pub ring_closure: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            min_heavy: 6,
            max_heavy: 14,
            aromatic_start: 0.35,
            amide: 0.12,
            hydroxyl: 0.06,
            phenyl: 0.04,
            ring_closure: 0.3,
        }
    }
}

struct Draft {
    atoms: Vec<AtomSpec>,
    free: Vec<u8>,
    bonds: Vec<(usize, usize, BondOrder)>,
}

impl Draft {
    fn add(&mut self, spec: AtomSpec, free: u8) -> usize {
        self.atoms.push(spec);
        self.free.push(free);
        self.atoms.len() - 1
    }

    fn bond(&mut self, a: usize, b: usize, order: BondOrder) {
        let used = order.valence_contribution();
        if order != BondOrder::Aromatic {
            self.free[a] -= used;
            self.free[b] -= used;
        }
        self.bonds.push((a, b, order));
    }

    fn phenyl(&mut self) -> usize {
        let first = self.atoms.len();
        for _ in 0..6 {
            // each aromatic carbon keeps one hydrogen slot for a substituent
            self.add(AtomSpec::aromatic(Element::C), 1);
        }
        for k in 0..6 {
            self.bond(first + k, first + (k + 1) % 6, BondOrder::Aromatic);
        }
        first
    }

    fn pick_site<R: Rng + ?Sized>(&self, rng: &mut R, need: u8) -> Option<usize> {
        let sites: Vec<usize> = (0..self.atoms.len()).filter(|&i| self.free[i] >= need).collect();
        if sites.is_empty() {
            None
        } else {
            Some(sites[rng.gen_range(0..sites.len())])
        }
    }

    fn distances_from(&self, start: usize) -> Vec<usize> {
        let mut adj = vec![Vec::new(); self.atoms.len()];
        for &(a, b, _) in &self.bonds {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut dist = vec![usize::MAX; self.atoms.len()];
        dist[start] = 0;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }
}

fn valence_of(e: Element) -> u8 {
    e.valences()[0]
}

fn random_element<R: Rng + ?Sized>(rng: &mut R) -> Element {
    let r: f64 = rng.gen();
    match r {
        r if r < 0.70 => Element::C,
        r if r < 0.82 => Element::N,
        r if r < 0.91 => Element::O,
        r if r < 0.94 => Element::F,
        r if r < 0.97 => Element::Cl,
        r if r < 0.99 => Element::S,
        _ => Element::Br,
    }
}

/// Grows a connected random molecule from fragments. Always valid.
pub fn random_molecule<R: Rng + ?Sized>(rng: &mut R, cfg: &GeneratorConfig) -> MolecularGraph {
    let target = rng.gen_range(cfg.min_heavy..=cfg.max_heavy.max(cfg.min_heavy));
    let mut d = Draft {
        atoms: Vec::new(),
        free: Vec::new(),
        bonds: Vec::new(),
    };
    if rng.gen_bool(cfg.aromatic_start) {
        d.phenyl();
    } else {
        d.add(AtomSpec::organic(Element::C), 4);
    }
    while d.atoms.len() < target {
        let Some(site) = d.pick_site(rng, 1) else { break };
        let r: f64 = rng.gen();
        if r < cfg.amide && d.atoms.len() + 3 <= target + 1 {
            let c = d.add(AtomSpec::organic(Element::C), 4);
            let o = d.add(AtomSpec::organic(Element::O), 2);
            let n = d.add(AtomSpec::organic(Element::N), 3);
            d.bond(site, c, BondOrder::Single);
            d.bond(c, o, BondOrder::Double);
            d.bond(c, n, BondOrder::Single);
        } else if r < cfg.amide + cfg.hydroxyl {
            let o = d.add(AtomSpec::organic(Element::O), 2);
            d.bond(site, o, BondOrder::Single);
            // keep the hydroxyl terminal
            d.free[o] = 0;
        } else if r < cfg.amide + cfg.hydroxyl + cfg.phenyl && d.atoms.len() + 6 <= target + 2 {
            let ring = d.phenyl();
            d.bond(site, ring, BondOrder::Single);
        } else {
            let e = random_element(rng);
            let v = valence_of(e);
            let aromatic_site = d.atoms[site].aromatic;
            let double_ok = !aromatic_site && v >= 2 && d.free[site] >= 2 && e != Element::S;
            let order = if double_ok && rng.gen_bool(0.12) {
                BondOrder::Double
            } else {
                BondOrder::Single
            };
            let a = d.add(AtomSpec::organic(e), v);
            d.bond(site, a, order);
        }
    }
    if rng.gen_bool(cfg.ring_closure) {
        let candidates: Vec<usize> = (0..d.atoms.len())
            .filter(|&i| d.free[i] >= 1 && !d.atoms[i].aromatic)
            .collect();
        'outer: for (k, &a) in candidates.iter().enumerate() {
            let dist = d.distances_from(a);
            for &b in &candidates[k + 1..] {
                if (4..=5).contains(&dist[b]) && rng.gen_bool(0.5) {
                    d.bond(a, b, BondOrder::Single);
                    break 'outer;
                }
            }
        }
    }
    let mut builder = GraphBuilder::new();
    for spec in &d.atoms {
        builder.add_atom(*spec);
    }
    for &(a, b, order) in &d.bonds {
        builder.add_bond(a, b, order).expect("draft bonds are distinct");
    }
    builder.build().expect("draft respects valences")
}

/// Substructures whose per-molecule counts serve as synthetic targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Motif {
    /// Aliphatic carbon double-bonded to O and single-bonded to N; counted
    /// once per carbonyl carbon.
    Amide,
    /// Oxygen with one hydrogen and a single bond to carbon.
    Hydroxyl,
}

pub fn count_motif(graph: &MolecularGraph, motif: Motif) -> usize {
    let atoms = graph.atoms();
    (0..graph.atom_count())
        .filter(|&i| {
            let nbrs = graph.neighbors(i);
            let has = |element: Element, order: BondOrder| {
                nbrs.iter()
                    .any(|&(nb, bi)| atoms[nb].element == element && graph.bonds()[bi].order == order)
            };
            match motif {
                Motif::Amide => {
                    atoms[i].element == Element::C
                        && !atoms[i].aromatic
                        && has(Element::O, BondOrder::Double)
                        && has(Element::N, BondOrder::Single)
                }
                Motif::Hydroxyl => {
                    atoms[i].element == Element::O
                        && atoms[i].hydrogens == 1
                        && atoms[i].charge == 0
                        && nbrs.len() == 1
                        && has(Element::C, BondOrder::Single)
                }
            }
        })
        .count()
}

/// A labeled synthetic molecule.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSample {
    pub smiles: String,
    pub graph: MolecularGraph,
    pub motif_count: usize,
    pub y: f64,
}

/// `n` molecules labeled with `count(motif) + N(0, noise_sd^2)`.
pub fn motif_regression<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    cfg: &GeneratorConfig,
    motif: Motif,
    noise_sd: f64,
) -> Vec<SyntheticSample> {
    (0..n)
        .map(|_| {
            let graph = random_molecule(rng, cfg);
            let motif_count = count_motif(&graph, motif);
            let z: f64 = rng.sample(StandardNormal);
            let y = motif_count as f64 + noise_sd * z;
            SyntheticSample {
                smiles: write_smiles(&graph),
                graph,
                motif_count,
                y,
            }
        })
        .collect()
}

//! Molecular graph types and the builder that derives hydrogens, degrees and
//! ring membership from a bare atom/bond list.

use std::fmt;

use crate::error::GraphError;

/// Elements accepted by the parser. Anything else is rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    B,
    C,
    N,
    O,
    F,
    Si,
    P,
    S,
    Cl,
    Br,
    I,
    H,
}

impl Element {
    pub const ALL: [Element; 12] = [
        Element::B,
        Element::C,
        Element::N,
        Element::O,
        Element::F,
        Element::Si,
        Element::P,
        Element::S,
        Element::Cl,
        Element::Br,
        Element::I,
        Element::H,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Element::B => "B",
            Element::C => "C",
            Element::N => "N",
            Element::O => "O",
            Element::F => "F",
            Element::Si => "Si",
            Element::P => "P",
            Element::S => "S",
            Element::Cl => "Cl",
            Element::Br => "Br",
            Element::I => "I",
            Element::H => "H",
        }
    }

    pub fn from_symbol(symbol: &str) -> Option<Element> {
        Element::ALL.iter().copied().find(|e| e.symbol() == symbol)
    }

    /// Position of the element in the featurizer's one-hot block.
    pub fn index(self) -> usize {
        Element::ALL.iter().position(|&e| e == self).unwrap()
    }

    pub fn atomic_number(self) -> u8 {
        match self {
            Element::H => 1,
            Element::B => 5,
            Element::C => 6,
            Element::N => 7,
            Element::O => 8,
            Element::F => 9,
            Element::Si => 14,
            Element::P => 15,
            Element::S => 16,
            Element::Cl => 17,
            Element::Br => 35,
            Element::I => 53,
        }
    }

    /// Allowed neutral valences, smallest first.
    pub fn valences(self) -> &'static [u8] {
        match self {
            Element::B => &[3],
            Element::C | Element::Si => &[4],
            Element::N => &[3, 5],
            Element::O => &[2],
            Element::P => &[3, 5],
            Element::S => &[2, 4, 6],
            Element::F | Element::Cl | Element::Br | Element::I | Element::H => &[1],
        }
    }

    /// Members of the unbracketed organic subset.
    pub fn in_organic_subset(self) -> bool {
        !matches!(self, Element::Si | Element::H)
    }

    /// Elements that may appear in lowercase aromatic form.
    pub fn can_be_aromatic(self) -> bool {
        matches!(
            self,
            Element::B | Element::C | Element::N | Element::O | Element::P | Element::S
        )
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Contribution to an atom's valence. Aromatic bonds count as one; the
    /// shared pi electron is accounted for when hydrogens are assigned.
    pub fn valence_contribution(self) -> u8 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }

    pub fn index(self) -> usize {
        match self {
            BondOrder::Single => 0,
            BondOrder::Double => 1,
            BondOrder::Triple => 2,
            BondOrder::Aromatic => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub element: Element,
    pub charge: i8,
    pub aromatic: bool,
    /// Total attached hydrogens that are not explicit graph atoms.
    pub hydrogens: u8,
    pub degree: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
    pub in_ring: bool,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }
}

/// A parsed 2D molecule. Bonds are stored once; `neighbors` is the symmetric
/// adjacency view derived from them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MolecularGraph {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    ring_count: usize,
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl MolecularGraph {
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn ring_count(&self) -> usize {
        self.ring_count
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `(neighbor atom, bond index)` pairs in bond insertion order.
    pub fn neighbors(&self, atom: usize) -> &[(usize, usize)] {
        &self.adjacency[atom]
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<&Bond> {
        self.adjacency[a]
            .iter()
            .find(|&&(n, _)| n == b)
            .map(|&(_, bi)| &self.bonds[bi])
    }

    /// Whether the atom takes part in at least one ring bond.
    pub fn atom_in_ring(&self, atom: usize) -> bool {
        self.adjacency[atom].iter().any(|&(_, bi)| self.bonds[bi].in_ring)
    }

    /// Number of connected components.
    pub fn component_count(&self) -> usize {
        components(self.atoms.len(), &self.adjacency).1
    }

    /// Re-checks every structural invariant. Graphs produced by the builder
    /// always pass; this exists for verification suites.
    pub fn check_invariants(&self) -> Result<(), String> {
        let n = self.atoms.len();
        let mut seen = std::collections::HashSet::new();
        for (i, bond) in self.bonds.iter().enumerate() {
            if bond.a == bond.b {
                return Err(format!("bond {i} is a self loop"));
            }
            if bond.a >= n || bond.b >= n {
                return Err(format!("bond {i} endpoint out of range"));
            }
            let key = (bond.a.min(bond.b), bond.a.max(bond.b));
            if !seen.insert(key) {
                return Err(format!("bond {i} duplicates atoms {key:?}"));
            }
            if bond.order == BondOrder::Aromatic && !(self.atoms[bond.a].aromatic && self.atoms[bond.b].aromatic) {
                return Err(format!("aromatic bond {i} touches a non-aromatic atom"));
            }
        }
        for (i, atom) in self.atoms.iter().enumerate() {
            let incident = self.bonds.iter().filter(|b| b.a == i || b.b == i).count();
            if atom.degree as usize != incident {
                return Err(format!("atom {i} degree {} but {incident} incident bonds", atom.degree));
            }
            for &(nb, bi) in &self.adjacency[i] {
                if !self.adjacency[nb].contains(&(i, bi)) {
                    return Err(format!("adjacency of {i} and {nb} is not symmetric"));
                }
            }
        }
        let expected_rings = (self.bonds.len() + self.component_count()).saturating_sub(n);
        if self.ring_count != expected_rings {
            return Err(format!(
                "ring count {} but cyclomatic number {expected_rings}",
                self.ring_count
            ));
        }
        Ok(())
    }
}

/// Atom description handed to [`GraphBuilder`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AtomSpec {
    pub element: Element,
    pub charge: i8,
    pub aromatic: bool,
    /// `Some` for bracket atoms, whose hydrogen count is written out.
    pub explicit_hydrogens: Option<u8>,
}

impl AtomSpec {
    pub fn organic(element: Element) -> Self {
        AtomSpec {
            element,
            charge: 0,
            aromatic: false,
            explicit_hydrogens: None,
        }
    }

    pub fn aromatic(element: Element) -> Self {
        AtomSpec {
            aromatic: true,
            ..AtomSpec::organic(element)
        }
    }
}

/// Collects atoms and bonds, then derives the remaining graph fields.
#[derive(Debug, Default, Clone)]
pub struct GraphBuilder {
    atoms: Vec<AtomSpec>,
    bonds: Vec<(usize, usize, BondOrder)>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_atom(&mut self, spec: AtomSpec) -> usize {
        self.atoms.push(spec);
        self.atoms.len() - 1
    }

    pub fn add_bond(&mut self, a: usize, b: usize, order: BondOrder) -> Result<usize, GraphError> {
        if a == b {
            return Err(GraphError::SelfLoop { atom: a });
        }
        if a >= self.atoms.len() || b >= self.atoms.len() {
            return Err(GraphError::AtomOutOfRange {
                atom: a.max(b),
                count: self.atoms.len(),
            });
        }
        if self
            .bonds
            .iter()
            .any(|&(x, y, _)| (x == a && y == b) || (x == b && y == a))
        {
            return Err(GraphError::DuplicateBond { a, b });
        }
        self.bonds.push((a, b, order));
        Ok(self.bonds.len() - 1)
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn atom(&self, index: usize) -> &AtomSpec {
        &self.atoms[index]
    }

    /// Sum of bond valence contributions currently attached to `atom`.
    pub fn bonded_valence(&self, atom: usize) -> u8 {
        self.bonds
            .iter()
            .filter(|&&(a, b, _)| a == atom || b == atom)
            .map(|&(_, _, o)| o.valence_contribution())
            .sum()
    }

    pub fn build(self) -> Result<MolecularGraph, GraphError> {
        let n = self.atoms.len();
        let mut adjacency = vec![Vec::new(); n];
        for (bi, &(a, b, _)) in self.bonds.iter().enumerate() {
            adjacency[a].push((b, bi));
            adjacency[b].push((a, bi));
        }

        let bridges = find_bridges(n, &adjacency, self.bonds.len());
        let mut bonds: Vec<Bond> = self
            .bonds
            .iter()
            .enumerate()
            .map(|(bi, &(a, b, order))| Bond {
                a,
                b,
                order,
                in_ring: !bridges[bi],
            })
            .collect();

        for (bi, bond) in bonds.iter_mut().enumerate() {
            if bond.order != BondOrder::Aromatic {
                continue;
            }
            if !(self.atoms[bond.a].aromatic && self.atoms[bond.b].aromatic) {
                return Err(GraphError::AromaticBondOnAliphatic { bond: bi });
            }
            // An aromatic bond outside any ring joins two aromatic systems.
            if !bond.in_ring {
                bond.order = BondOrder::Single;
            }
        }

        let mut atoms = Vec::with_capacity(n);
        for (i, spec) in self.atoms.iter().enumerate() {
            let in_ring = adjacency[i].iter().any(|&(_, bi)| bonds[bi].in_ring);
            if spec.aromatic && !in_ring {
                return Err(GraphError::AromaticOutsideRing { atom: i });
            }
            let bonded: u8 = adjacency[i]
                .iter()
                .map(|&(_, bi)| bonds[bi].order.valence_contribution())
                .sum();
            let hydrogens = assign_hydrogens(i, spec, bonded)?;
            atoms.push(Atom {
                element: spec.element,
                charge: spec.charge,
                aromatic: spec.aromatic,
                hydrogens,
                degree: adjacency[i].len() as u8,
            });
        }

        let (_, component_count) = components(n, &adjacency);
        let ring_count = (bonds.len() + component_count).saturating_sub(n);
        Ok(MolecularGraph {
            atoms,
            bonds,
            ring_count,
            adjacency,
        })
    }
}

/// Hydrogens for an atom given the valence already used by its bonds.
pub(crate) fn assign_hydrogens(atom: usize, spec: &AtomSpec, bonded: u8) -> Result<u8, GraphError> {
    let valences = spec.element.valences();
    let max_valence = *valences.last().unwrap();
    if let Some(h) = spec.explicit_hydrogens {
        let allowed = max_valence as i32 + (spec.charge as i32).abs();
        if (bonded + h) as i32 > allowed {
            return Err(GraphError::Valence {
                atom,
                element: spec.element,
                used: bonded + h,
            });
        }
        return Ok(h);
    }
    if bonded > max_valence {
        return Err(GraphError::Valence {
            atom,
            element: spec.element,
            used: bonded,
        });
    }
    if spec.aromatic {
        // O and S donate a lone pair to the ring and carry no hydrogen.
        if matches!(spec.element, Element::O | Element::S) {
            return Ok(0);
        }
        return Ok(valences[0].saturating_sub(bonded + 1));
    }
    let target = valences.iter().copied().find(|&v| v >= bonded).unwrap();
    Ok(target - bonded)
}

/// Iterative Tarjan bridge finding. Returns one flag per bond.
fn find_bridges(n: usize, adjacency: &[Vec<(usize, usize)>], bond_count: usize) -> Vec<bool> {
    let mut bridge = vec![false; bond_count];
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut timer = 0;
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        // (node, bond used to enter, next neighbor cursor)
        let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        while let Some(&mut (node, via, ref mut cursor)) = stack.last_mut() {
            if *cursor < adjacency[node].len() {
                let (next, bi) = adjacency[node][*cursor];
                *cursor += 1;
                if bi == via {
                    continue;
                }
                if disc[next] == usize::MAX {
                    disc[next] = timer;
                    low[next] = timer;
                    timer += 1;
                    stack.push((next, bi, 0));
                } else {
                    low[node] = low[node].min(disc[next]);
                }
            } else {
                stack.pop();
                if let Some(&(parent, _, _)) = stack.last() {
                    low[parent] = low[parent].min(low[node]);
                    if low[node] > disc[parent] {
                        bridge[via] = true;
                    }
                }
            }
        }
    }
    bridge
}

fn components(n: usize, adjacency: &[Vec<(usize, usize)>]) -> (Vec<usize>, usize) {
    let mut label = vec![usize::MAX; n];
    let mut count = 0;
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        label[start] = count;
        while let Some(node) = stack.pop() {
            for &(next, _) in &adjacency[node] {
                if label[next] == usize::MAX {
                    label[next] = count;
                    stack.push(next);
                }
            }
        }
        count += 1;
    }
    (label, count)
}

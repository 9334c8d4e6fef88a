//! SMILES subset parser.
//!
//! Supports organic-subset and bracket atoms (charge, hydrogen count, atom
//! class), the four bond symbols plus `:`, branches, single- and two-digit
//! (`%nn`) ring closures, lowercase aromatic atoms and `.` separated
//! components. Stereo markers (`/`, `\`, `@`) and isotope labels are read and
//! discarded with a warning.

use std::collections::BTreeMap;

use log::warn;

use crate::error::{GraphError, ParseError, ParseErrorKind};
use crate::graph::{AtomSpec, BondOrder, Element, GraphBuilder, MolecularGraph};

/// Longest accepted input, in bytes.
pub const MAX_SMILES_LEN: usize = 400;

#[derive(Debug, Clone, Copy)]
struct PendingBond {
    order: BondOrder,
    offset: usize,
}

#[derive(Debug, Clone, Copy)]
struct OpenRing {
    atom: usize,
    bond: Option<BondOrder>,
    offset: usize,
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    builder: GraphBuilder,
    atom_offsets: Vec<usize>,
    prev: Option<usize>,
    branches: Vec<(Option<usize>, usize)>,
    rings: BTreeMap<u32, OpenRing>,
    pending: Option<PendingBond>,
}

/// Parses a SMILES string into a [`MolecularGraph`].
pub fn parse_smiles(smiles: &str) -> Result<MolecularGraph, ParseError> {
    if smiles.is_empty() {
        return Err(ParseError::new(0, ParseErrorKind::Empty));
    }
    if let Some(i) = smiles.bytes().position(|b| !b.is_ascii()) {
        return Err(ParseError::new(i, ParseErrorKind::NonAscii));
    }
    if smiles.len() > MAX_SMILES_LEN {
        return Err(ParseError::new(
            MAX_SMILES_LEN,
            ParseErrorKind::TooLong { max: MAX_SMILES_LEN },
        ));
    }
    Parser {
        src: smiles.as_bytes(),
        pos: 0,
        builder: GraphBuilder::new(),
        atom_offsets: Vec::new(),
        prev: None,
        branches: Vec::new(),
        rings: BTreeMap::new(),
        pending: None,
    }
    .run()
}

impl<'a> Parser<'a> {
    fn err<T>(&self, offset: usize, kind: ParseErrorKind) -> Result<T, ParseError> {
        Err(ParseError::new(offset, kind))
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn run(mut self) -> Result<MolecularGraph, ParseError> {
        while let Some(c) = self.peek() {
            let start = self.pos;
            match c {
                b'(' => {
                    if self.prev.is_none() {
                        return self.err(start, ParseErrorKind::MissingAtom);
                    }
                    if self.pending.is_some() {
                        return self.err(start, ParseErrorKind::DanglingBond);
                    }
                    self.branches.push((self.prev, start));
                    self.pos += 1;
                }
                b')' => {
                    if self.pending.is_some() {
                        return self.err(start, ParseErrorKind::DanglingBond);
                    }
                    match self.branches.pop() {
                        Some((prev, _)) => self.prev = prev,
                        None => return self.err(start, ParseErrorKind::UnmatchedBranchClose),
                    }
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' => {
                    if self.prev.is_none() {
                        return self.err(start, ParseErrorKind::MissingAtom);
                    }
                    if self.pending.is_some() {
                        return self.err(start, ParseErrorKind::UnexpectedChar(c as char));
                    }
                    let order = match c {
                        b'=' => BondOrder::Double,
                        b'#' => BondOrder::Triple,
                        b':' => BondOrder::Aromatic,
                        b'/' | b'\\' => {
                            warn!("ignoring directional bond marker at offset {start}");
                            BondOrder::Single
                        }
                        _ => BondOrder::Single,
                    };
                    self.pending = Some(PendingBond { order, offset: start });
                    self.pos += 1;
                }
                b'.' => {
                    if self.pending.is_some() || self.prev.is_none() {
                        return self.err(start, ParseErrorKind::DanglingBond);
                    }
                    self.prev = None;
                    self.pos += 1;
                }
                b'0'..=b'9' | b'%' => self.ring_closure()?,
                b'[' => {
                    let spec = self.bracket_atom()?;
                    self.attach_atom(spec, start)?;
                }
                _ => {
                    let spec = self.organic_atom()?;
                    self.attach_atom(spec, start)?;
                }
            }
        }

        if let Some(p) = self.pending {
            return self.err(p.offset, ParseErrorKind::DanglingBond);
        }
        if let Some(&(_, offset)) = self.branches.last() {
            return self.err(offset, ParseErrorKind::UnclosedBranch);
        }
        if let Some((&digit, ring)) = self.rings.iter().next() {
            return self.err(ring.offset, ParseErrorKind::UnclosedRing(digit));
        }
        if self.builder.atom_count() == 0 {
            return self.err(0, ParseErrorKind::Empty);
        }
        let offsets = std::mem::take(&mut self.atom_offsets);
        let len = self.src.len();
        self.builder.build().map_err(|e| {
            let offset = match e {
                GraphError::Valence { atom, .. }
                | GraphError::AromaticOutsideRing { atom }
                | GraphError::SelfLoop { atom } => offsets.get(atom).copied().unwrap_or(0),
                _ => len.saturating_sub(1),
            };
            ParseError::new(offset, ParseErrorKind::Graph(e))
        })
    }

    fn attach_atom(&mut self, spec: AtomSpec, offset: usize) -> Result<(), ParseError> {
        let idx = self.builder.add_atom(spec);
        self.atom_offsets.push(offset);
        if let Some(prev) = self.prev {
            let order = match self.pending.take() {
                Some(p) => p.order,
                None => default_order(self.builder.atom(prev), &spec),
            };
            self.builder
                .add_bond(prev, idx, order)
                .map_err(|e| ParseError::new(offset, e.into()))?;
        } else if let Some(p) = self.pending {
            return self.err(p.offset, ParseErrorKind::DanglingBond);
        }
        self.prev = Some(idx);
        Ok(())
    }

    fn ring_closure(&mut self) -> Result<(), ParseError> {
        let start = self.pos;
        let Some(atom) = self.prev else {
            return self.err(start, ParseErrorKind::MissingAtom);
        };
        let digit = if self.src[start] == b'%' {
            let d = self.src.get(start + 1..start + 3);
            match d {
                Some(&[a, b]) if a.is_ascii_digit() && b.is_ascii_digit() => {
                    self.pos += 3;
                    ((a - b'0') * 10 + (b - b'0')) as u32
                }
                _ => return self.err(start, ParseErrorKind::UnexpectedChar('%')),
            }
        } else {
            self.pos += 1;
            (self.src[start] - b'0') as u32
        };
        let bond = self.pending.take().map(|p| p.order);
        match self.rings.remove(&digit) {
            None => {
                self.rings.insert(
                    digit,
                    OpenRing {
                        atom,
                        bond,
                        offset: start,
                    },
                );
            }
            Some(open) => {
                let order = match (open.bond, bond) {
                    (Some(a), Some(b)) if a != b => return self.err(start, ParseErrorKind::RingBondConflict),
                    (Some(a), _) | (None, Some(a)) => a,
                    (None, None) => default_order(self.builder.atom(open.atom), self.builder.atom(atom)),
                };
                self.builder
                    .add_bond(open.atom, atom, order)
                    .map_err(|e| ParseError::new(start, e.into()))?;
            }
        }
        Ok(())
    }

    fn organic_atom(&mut self) -> Result<AtomSpec, ParseError> {
        let start = self.pos;
        let c = self.src[start];
        let next = self.src.get(start + 1).copied();
        let (element, aromatic, width) = match (c, next) {
            (b'C', Some(b'l')) => (Element::Cl, false, 2),
            (b'B', Some(b'r')) => (Element::Br, false, 2),
            (b'B', _) => (Element::B, false, 1),
            (b'C', _) => (Element::C, false, 1),
            (b'N', _) => (Element::N, false, 1),
            (b'O', _) => (Element::O, false, 1),
            (b'P', _) => (Element::P, false, 1),
            (b'S', _) => (Element::S, false, 1),
            (b'F', _) => (Element::F, false, 1),
            (b'I', _) => (Element::I, false, 1),
            (b'b', _) => (Element::B, true, 1),
            (b'c', _) => (Element::C, true, 1),
            (b'n', _) => (Element::N, true, 1),
            (b'o', _) => (Element::O, true, 1),
            (b'p', _) => (Element::P, true, 1),
            (b's', _) => (Element::S, true, 1),
            (ch, nx) if ch.is_ascii_alphabetic() || ch == b'*' => {
                let mut sym = (ch as char).to_string();
                if let Some(n) = nx.filter(|n| n.is_ascii_lowercase()) {
                    sym.push(n as char);
                }
                return self.err(start, ParseErrorKind::UnknownElement(sym));
            }
            (ch, _) => return self.err(start, ParseErrorKind::UnexpectedChar(ch as char)),
        };
        self.pos += width;
        Ok(AtomSpec {
            element,
            charge: 0,
            aromatic,
            explicit_hydrogens: None,
        })
    }

    fn bracket_atom(&mut self) -> Result<AtomSpec, ParseError> {
        let open = self.pos;
        let close = match self.src[open..].iter().position(|&b| b == b']') {
            Some(rel) => open + rel,
            None => return self.err(open, ParseErrorKind::UnterminatedBracket),
        };
        let body = &self.src[open + 1..close];
        let at = |i: usize| open + 1 + i;
        let mut i = 0;

        if body.first().is_some_and(|b| b.is_ascii_digit()) {
            while i < body.len() && body[i].is_ascii_digit() {
                i += 1;
            }
            warn!("ignoring isotope label at offset {}", at(0));
        }

        let sym_start = i;
        let (element, aromatic) = {
            let first = *body
                .get(i)
                .ok_or(ParseError::new(at(i), ParseErrorKind::UnexpectedChar(']')))?;
            let second = body.get(i + 1).copied();
            if first.is_ascii_uppercase() {
                let two = second.filter(|s| s.is_ascii_lowercase()).and_then(|s| {
                    let sym = [first, s];
                    Element::from_symbol(std::str::from_utf8(&sym).unwrap())
                });
                // nothing after a bracket symbol starts with a lowercase letter
                let two_letter = second.is_some_and(|s| s.is_ascii_lowercase());
                if let Some(e) = two {
                    i += 2;
                    (e, false)
                } else if let Some(e) = (!two_letter)
                    .then(|| Element::from_symbol(std::str::from_utf8(&[first]).unwrap()))
                    .flatten()
                {
                    i += 1;
                    (e, false)
                } else {
                    let mut sym = (first as char).to_string();
                    if let Some(s) = second.filter(|s| s.is_ascii_lowercase()) {
                        sym.push(s as char);
                    }
                    return self.err(at(sym_start), ParseErrorKind::UnknownElement(sym));
                }
            } else if first.is_ascii_lowercase() {
                let e = match first {
                    b'b' => Element::B,
                    b'c' => Element::C,
                    b'n' => Element::N,
                    b'o' => Element::O,
                    b'p' => Element::P,
                    b's' => Element::S,
                    _ => {
                        let mut sym = (first as char).to_string();
                        if let Some(s) = second.filter(|s| s.is_ascii_lowercase()) {
                            sym.push(s as char);
                        }
                        return self.err(at(sym_start), ParseErrorKind::UnknownElement(sym));
                    }
                };
                if second.is_some_and(|s| s.is_ascii_lowercase()) {
                    let sym = String::from_utf8(vec![first, second.unwrap()]).unwrap();
                    return self.err(at(sym_start), ParseErrorKind::UnknownElement(sym));
                }
                i += 1;
                (e, true)
            } else {
                return self.err(at(i), ParseErrorKind::UnexpectedChar(first as char));
            }
        };

        if body.get(i) == Some(&b'@') {
            while body.get(i) == Some(&b'@') {
                i += 1;
            }
            // @TH1, @SP2 and friends
            while body.get(i).is_some_and(|b| b.is_ascii_uppercase() && *b != b'H') {
                i += 1;
            }
            while body.get(i).is_some_and(|b| b.is_ascii_digit()) {
                i += 1;
            }
            warn!("ignoring chirality marker at offset {}", at(i));
        }

        let mut hydrogens = 0u8;
        if body.get(i) == Some(&b'H') {
            i += 1;
            hydrogens = 1;
            if let Some(d) = body.get(i).filter(|b| b.is_ascii_digit()) {
                hydrogens = d - b'0';
                i += 1;
            }
        }

        let mut charge = 0i8;
        if let Some(&sign) = body.get(i).filter(|&&b| b == b'+' || b == b'-') {
            let unit: i8 = if sign == b'+' { 1 } else { -1 };
            i += 1;
            charge = unit;
            if body.get(i).is_some_and(|b| b.is_ascii_digit()) {
                let mut mag = 0i8;
                while let Some(d) = body.get(i).filter(|b| b.is_ascii_digit()) {
                    mag = mag.saturating_mul(10).saturating_add((d - b'0') as i8);
                    i += 1;
                }
                charge = unit * mag;
            } else {
                while body.get(i) == Some(&sign) {
                    charge += unit;
                    i += 1;
                }
            }
        }

        if body.get(i) == Some(&b':') {
            i += 1;
            while body.get(i).is_some_and(|b| b.is_ascii_digit()) {
                i += 1;
            }
        }

        if i != body.len() {
            return self.err(at(i), ParseErrorKind::UnexpectedChar(body[i] as char));
        }
        self.pos = close + 1;
        Ok(AtomSpec {
            element,
            charge,
            aromatic,
            explicit_hydrogens: Some(hydrogens),
        })
    }
}

fn default_order(a: &AtomSpec, b: &AtomSpec) -> BondOrder {
    if a.aromatic && b.aromatic {
        BondOrder::Aromatic
    } else {
        BondOrder::Single
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> MolecularGraph {
        parse_smiles(s).unwrap_or_else(|e| panic!("{s}: {e}"))
    }

    fn kind(s: &str) -> (usize, ParseErrorKind) {
        let e = parse_smiles(s).unwrap_err();
        (e.offset, e.kind)
    }

    #[test]
    fn methane() {
        let g = parse("C");
        assert_eq!(g.atom_count(), 1);
        assert_eq!(g.bond_count(), 0);
        assert_eq!(g.atoms()[0].element, Element::C);
        assert_eq!(g.atoms()[0].hydrogens, 4);
    }

    #[test]
    fn ethanol() {
        let g = parse("CCO");
        assert_eq!(g.atom_count(), 3);
        assert_eq!(g.bond_count(), 2);
        assert!(g.bonds().iter().all(|b| b.order == BondOrder::Single));
        let h: Vec<u8> = g.atoms().iter().map(|a| a.hydrogens).collect();
        assert_eq!(h, vec![3, 2, 1]);
        assert_eq!(g.ring_count(), 0);
    }

    #[test]
    fn benzene() {
        let g = parse("c1ccccc1");
        assert_eq!(g.atom_count(), 6);
        assert_eq!(g.bond_count(), 6);
        assert_eq!(g.ring_count(), 1);
        assert!(g.atoms().iter().all(|a| a.aromatic && a.hydrogens == 1));
        assert!(g.bonds().iter().all(|b| b.order == BondOrder::Aromatic && b.in_ring));
    }

    #[test]
    fn unclosed_branch_offset() {
        assert_eq!(kind("C("), (1, ParseErrorKind::UnclosedBranch));
        assert_eq!(kind("CC(C(C)C"), (2, ParseErrorKind::UnclosedBranch));
    }

    #[test]
    fn error_paths() {
        assert_eq!(kind("C)").1, ParseErrorKind::UnmatchedBranchClose);
        assert_eq!(kind("C1CC").1, ParseErrorKind::UnclosedRing(1));
        assert_eq!(kind("C1CC").0, 1);
        assert_eq!(kind("CXC"), (1, ParseErrorKind::UnknownElement("X".into())));
        assert_eq!(kind("C[Na+]").1, ParseErrorKind::UnknownElement("Na".into()));
        assert_eq!(kind("").1, ParseErrorKind::Empty);
        assert_eq!(kind("C=").1, ParseErrorKind::DanglingBond);
        assert_eq!(kind("(C)").1, ParseErrorKind::MissingAtom);
        assert_eq!(kind("C[CH3").1, ParseErrorKind::UnterminatedBracket);
        assert!(matches!(
            kind("FC(F)(F)(F)F"),
            (1, ParseErrorKind::Graph(GraphError::Valence { .. }))
        ));
        assert!(matches!(
            kind("O=O=O").1,
            ParseErrorKind::Graph(GraphError::Valence { .. })
        ));
        assert!(matches!(
            kind("cc").1,
            ParseErrorKind::Graph(GraphError::AromaticOutsideRing { .. })
        ));
        assert_eq!(kind("C1CC=1C1").1, ParseErrorKind::UnclosedRing(1));
        assert!(matches!(
            kind("C11").1,
            ParseErrorKind::Graph(GraphError::SelfLoop { .. })
        ));
        assert_eq!(kind("C=1CC-1").1, ParseErrorKind::RingBondConflict);
        let long = "C".repeat(MAX_SMILES_LEN + 1);
        assert!(matches!(kind(&long).1, ParseErrorKind::TooLong { .. }));
        assert_eq!(kind("Cé").1, ParseErrorKind::NonAscii);
    }

    #[test]
    fn bracket_atoms() {
        let g = parse("C[N+](C)(C)C");
        assert_eq!(g.atoms()[1].charge, 1);
        assert_eq!(g.atoms()[1].hydrogens, 0);
        let g = parse("[O-]C(=O)C");
        assert_eq!(g.atoms()[0].charge, -1);
        let g = parse("[NH4+]");
        assert_eq!(g.atoms()[0].hydrogens, 4);
        let g = parse("[SiH4]");
        assert_eq!(g.atoms()[0].element, Element::Si);
        let g = parse("[Fe+2]".replace("Fe", "Cl").as_str());
        assert_eq!(g.atoms()[0].charge, 2);
        let g = parse("[O--]");
        assert_eq!(g.atoms()[0].charge, -2);
        let g = parse("[13CH4]");
        assert_eq!(g.atoms()[0].hydrogens, 4);
        let g = parse("[CH3:7]C");
        assert_eq!(g.atoms()[0].hydrogens, 3);
        let g = parse("[H]C([H])([H])[H]");
        assert_eq!(g.atom_count(), 5);
        assert_eq!(g.atoms()[1].hydrogens, 0);
    }

    #[test]
    fn aromatic_heterocycles() {
        let pyridine = parse("c1ccncc1");
        assert_eq!(pyridine.atoms()[3].hydrogens, 0);
        let pyrrole = parse("c1cc[nH]c1");
        assert_eq!(pyrrole.atoms()[3].hydrogens, 1);
        let furan = parse("c1ccoc1");
        assert_eq!(furan.atoms()[3].hydrogens, 0);
        let thiophene = parse("c1ccsc1");
        assert_eq!(thiophene.atoms()[3].hydrogens, 0);
        let naphthalene = parse("c1ccc2ccccc2c1");
        assert_eq!(naphthalene.ring_count(), 2);
        assert_eq!(naphthalene.atoms().iter().filter(|a| a.hydrogens == 0).count(), 2);
        let pyridone = parse("O=c1cccc[nH]1");
        assert_eq!(pyridone.atoms()[1].hydrogens, 0);
    }

    #[test]
    fn biphenyl_link_is_single() {
        let g = parse("c1ccccc1c1ccccc1");
        let link = g.bond_between(5, 6).unwrap();
        assert_eq!(link.order, BondOrder::Single);
        assert!(!link.in_ring);
        assert_eq!(g.ring_count(), 2);
    }

    #[test]
    fn ring_closures_and_branches() {
        let g = parse("C1CC2CCC1CC2");
        assert_eq!(g.ring_count(), 2);
        let g = parse("C%10CCCCC%10");
        assert_eq!(g.ring_count(), 1);
        let g = parse("CC(=O)Oc1ccccc1C(=O)O");
        assert_eq!(g.atom_count(), 13);
        assert_eq!(g.ring_count(), 1);
        let g = parse("C=1CCCCC1");
        assert_eq!(g.bond_between(0, 5).unwrap().order, BondOrder::Double);
        let g = parse("C#N");
        assert_eq!(g.bonds()[0].order, BondOrder::Triple);
        assert_eq!(g.atoms()[0].hydrogens, 1);
    }

    #[test]
    fn stereo_is_ignored() {
        let a = parse("F/C=C/F");
        let b = parse("FC=CF");
        assert_eq!(a, b);
        let c = parse("N[C@@H](C)C(=O)O");
        let d = parse("N[CH](C)C(=O)O");
        assert_eq!(c, d);
    }

    #[test]
    fn disconnected_components() {
        let g = parse("CC(=O)[O-].[NH4+]");
        assert_eq!(g.component_count(), 2);
        assert_eq!(g.ring_count(), 0);
    }

    #[test]
    fn hypervalent_forms() {
        let g = parse("CS(=O)(=O)C");
        assert_eq!(g.atoms()[1].hydrogens, 0);
        let g = parse("OP(=O)(O)O");
        assert_eq!(g.atoms()[1].hydrogens, 0);
        let g = parse("C[N+](=O)[O-]");
        assert_eq!(g.atoms()[1].charge, 1);
    }

    #[test]
    fn parse_is_deterministic() {
        for s in ["CCO", "c1ccccc1O", "CC(C)(C)N"] {
            assert_eq!(parse(s), parse(s));
        }
    }
}

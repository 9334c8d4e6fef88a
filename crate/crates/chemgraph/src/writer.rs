//! Non-canonical SMILES output.
//!
//! Depth-first emission with a caller-chosen start atom and neighbor order;
//! used to produce alternative spellings of one molecule.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::{assign_hydrogens, AtomSpec, BondOrder, MolecularGraph};

/// Writes the graph starting each component at its lowest-index atom and
/// visiting neighbors in bond insertion order.
pub fn write_smiles(graph: &MolecularGraph) -> String {
    let order: Vec<Vec<usize>> = (0..graph.atom_count())
        .map(|i| graph.neighbors(i).iter().map(|&(nb, _)| nb).collect())
        .collect();
    let starts: Vec<usize> = (0..graph.atom_count()).collect();
    emit(graph, &starts, &order)
}

/// Writes a random valid spelling: random component order, start atoms and
/// branch order.
pub fn write_random_smiles<R: Rng + ?Sized>(graph: &MolecularGraph, rng: &mut R) -> String {
    let mut starts: Vec<usize> = (0..graph.atom_count()).collect();
    starts.shuffle(rng);
    let order: Vec<Vec<usize>> = (0..graph.atom_count())
        .map(|i| {
            let mut nbs: Vec<usize> = graph.neighbors(i).iter().map(|&(nb, _)| nb).collect();
            nbs.shuffle(rng);
            nbs
        })
        .collect();
    emit(graph, &starts, &order)
}

fn emit(graph: &MolecularGraph, starts: &[usize], order: &[Vec<usize>]) -> String {
    let n = graph.atom_count();
    let mut visited = vec![false; n];
    let mut tree_children: Vec<Vec<usize>> = vec![Vec::new(); n];
    // ring closures per atom, in the order they must be written
    let mut closures: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut components = Vec::new();

    for &start in starts {
        if visited[start] {
            continue;
        }
        components.push(start);
        // iterative DFS that mirrors the recursive emission order
        let mut on_stack = vec![false; n];
        let mut done_bond = vec![false; graph.bond_count()];
        let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
        visited[start] = true;
        on_stack[start] = true;
        while let Some(&mut (atom, ref mut cursor)) = stack.last_mut() {
            if *cursor == order[atom].len() {
                on_stack[atom] = false;
                stack.pop();
                continue;
            }
            let nb = order[atom][*cursor];
            *cursor += 1;
            let bi = graph
                .neighbors(atom)
                .iter()
                .find(|&&(x, _)| x == nb)
                .map(|&(_, bi)| bi)
                .unwrap();
            if done_bond[bi] {
                continue;
            }
            done_bond[bi] = true;
            if visited[nb] {
                // back edge: opens at the ancestor and closes here
                closures[nb].push(bi);
                closures[atom].push(bi);
            } else {
                visited[nb] = true;
                on_stack[nb] = true;
                tree_children[atom].push(nb);
                stack.push((nb, 0));
            }
        }
    }

    // Closure bonds opened at an atom are recorded when the descendant finds
    // the back edge, so an ancestor's list may be appended after it has been
    // visited. Emission below assigns digits in visiting order, which is
    // consistent because an opening atom is always emitted first.
    let mut out = String::new();
    let mut digits: Vec<Option<usize>> = vec![None; graph.bond_count()];
    let mut free: Vec<usize> = Vec::new();
    let mut next_digit = 1;
    for (ci, &start) in components.iter().enumerate() {
        if ci > 0 {
            out.push('.');
        }
        write_atom_rec(
            graph,
            start,
            None,
            &tree_children,
            &closures,
            &mut digits,
            &mut free,
            &mut next_digit,
            &mut out,
        );
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn write_atom_rec(
    graph: &MolecularGraph,
    atom: usize,
    parent: Option<usize>,
    children: &[Vec<usize>],
    closures: &[Vec<usize>],
    digits: &mut Vec<Option<usize>>,
    free: &mut Vec<usize>,
    next_digit: &mut usize,
    out: &mut String,
) {
    if let Some(p) = parent {
        out.push_str(bond_symbol(graph, p, atom));
    }
    out.push_str(&atom_token(graph, atom));
    for &bi in &closures[atom] {
        match digits[bi] {
            Some(d) => {
                push_digit(out, d);
                free.push(d);
                free.sort_unstable_by(|a, b| b.cmp(a));
            }
            None => {
                let d = free.pop().unwrap_or_else(|| {
                    let d = *next_digit;
                    *next_digit += 1;
                    d
                });
                let bond = &graph.bonds()[bi];
                out.push_str(bond_symbol(graph, bond.a, bond.b));
                push_digit(out, d);
                digits[bi] = Some(d);
            }
        }
    }
    let kids = &children[atom];
    for (k, &child) in kids.iter().enumerate() {
        let last = k + 1 == kids.len();
        if !last {
            out.push('(');
        }
        write_atom_rec(
            graph,
            child,
            Some(atom),
            children,
            closures,
            digits,
            free,
            next_digit,
            out,
        );
        if !last {
            out.push(')');
        }
    }
}

fn push_digit(out: &mut String, d: usize) {
    if d < 10 {
        out.push(char::from(b'0' + d as u8));
    } else {
        out.push_str(&format!("%{d:02}"));
    }
}

fn bond_symbol(graph: &MolecularGraph, a: usize, b: usize) -> &'static str {
    let bond = graph.bond_between(a, b).unwrap();
    let both_aromatic = graph.atoms()[a].aromatic && graph.atoms()[b].aromatic;
    match bond.order {
        BondOrder::Single if both_aromatic => "-",
        BondOrder::Single | BondOrder::Aromatic => "",
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
    }
}

fn atom_token(graph: &MolecularGraph, i: usize) -> String {
    let atom = &graph.atoms()[i];
    let symbol = if atom.aromatic {
        atom.element.symbol().to_ascii_lowercase()
    } else {
        atom.element.symbol().to_string()
    };
    let bonded: u8 = graph
        .neighbors(i)
        .iter()
        .map(|&(_, bi)| graph.bonds()[bi].order.valence_contribution())
        .sum();
    let spec = AtomSpec {
        element: atom.element,
        charge: 0,
        aromatic: atom.aromatic,
        explicit_hydrogens: None,
    };
    let implicit = assign_hydrogens(i, &spec, bonded).ok();
    if atom.charge == 0 && atom.element.in_organic_subset() && implicit == Some(atom.hydrogens) {
        return symbol;
    }
    let mut token = format!("[{symbol}");
    match atom.hydrogens {
        0 => {}
        1 => token.push('H'),
        h => token.push_str(&format!("H{h}")),
    }
    match atom.charge {
        0 => {}
        1 => token.push('+'),
        -1 => token.push('-'),
        c if c > 0 => token.push_str(&format!("+{c}")),
        c => token.push_str(&format!("-{}", -c)),
    }
    token.push(']');
    token
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fingerprint::morgan_fingerprint;
    use crate::smiles::parse_smiles;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const SAMPLES: &[&str] = &[
        "CCO",
        "c1ccccc1",
        "CC(=O)Oc1ccccc1C(=O)O",
        "C1CC2CCC1CC2",
        "c1ccc2ccccc2c1",
        "c1cc[nH]c1",
        "CC(=O)[O-].[NH4+]",
        "C[N+](=O)[O-]",
        "c1ccccc1-c1ccccc1",
        "CN1CCC(CC1)c1ccc(Cl)cc1",
        "O=C1NC(=O)c2ccccc21",
        "C1CCCCCCCCC2CCCCCCCCC1CCCCCCCC2",
    ];

    fn invariant_profile(g: &MolecularGraph) -> (usize, usize, usize, Vec<u64>) {
        let mut bits: Vec<u64> = morgan_fingerprint(g, 3, 2048).ones().map(|b| b as u64).collect();
        bits.sort_unstable();
        (g.atom_count(), g.bond_count(), g.ring_count(), bits)
    }

    #[test]
    fn canonical_order_round_trips() {
        for s in SAMPLES {
            let g = parse_smiles(s).unwrap();
            let written = write_smiles(&g);
            let back = parse_smiles(&written).unwrap_or_else(|e| panic!("{s} -> {written}: {e}"));
            assert_eq!(invariant_profile(&g), invariant_profile(&back), "{s} -> {written}");
        }
    }

    #[test]
    fn random_spellings_parse_to_the_same_molecule() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for s in SAMPLES {
            let g = parse_smiles(s).unwrap();
            for _ in 0..20 {
                let written = write_random_smiles(&g, &mut rng);
                let back = parse_smiles(&written).unwrap_or_else(|e| panic!("{s} -> {written}: {e}"));
                assert_eq!(invariant_profile(&g), invariant_profile(&back), "{s} -> {written}");
            }
        }
    }
}

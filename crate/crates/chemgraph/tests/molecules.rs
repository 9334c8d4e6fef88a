use chemgraph::{
    featurize, morgan_fingerprint, parse_smiles, smiles_similarity, tanimoto, write_random_smiles, BondOrder,
    MolecularGraph, ParseErrorKind, EDGE_DIM, NODE_DIM,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const MOLECULES: &[&str] = &[
    "CC(=O)Oc1ccccc1C(=O)O",
    "CN1C=NC2=C1C(=O)N(C(=O)N2C)C",
    "CC(C)Cc1ccc(cc1)C(C)C(=O)O",
    "c1ccc2c(c1)cc1ccccc12",
    "OC[C@H]1OC(O)[C@H](O)[C@@H](O)[C@@H]1O",
    "C1CC2CCC1C2",
    "c1ccncc1",
    "c1cc[nH]c1",
    "O=C(NCc1ccco1)c1ccc(Cl)cc1",
    "[NH4+].[Cl-]",
    "CS(=O)(=O)N",
    "C#CCN(C)C",
    "FC(F)(F)c1ccc(Br)cc1",
    "C1CCC%10CCCCC%10C1",
    "[O-][N+](=O)c1ccccc1",
];

fn sorted_rows(data: &[f64], width: usize) -> Vec<Vec<u64>> {
    let mut rows: Vec<Vec<u64>> = data
        .chunks(width)
        .map(|r| r.iter().map(|v| v.to_bits()).collect())
        .collect();
    rows.sort();
    rows
}

fn bond_multiset(g: &MolecularGraph) -> Vec<(BondOrder, bool)> {
    let mut v: Vec<(BondOrder, bool)> = g.bonds().iter().map(|b| (b.order, b.in_ring)).collect();
    v.sort_by_key(|&(o, r)| (o.index(), r));
    v
}

proptest! {
    #[test]
    fn respellings_describe_the_same_molecule(which in 0..MOLECULES.len(), seed in any::<u64>()) {
        let g = parse_smiles(MOLECULES[which]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spelled = write_random_smiles(&g, &mut rng);
        let h = parse_smiles(&spelled).unwrap();
        prop_assert!(h.check_invariants().is_ok());
        prop_assert_eq!(h.atom_count(), g.atom_count());
        prop_assert_eq!(h.ring_count(), g.ring_count());
        prop_assert_eq!(bond_multiset(&h), bond_multiset(&g));
        prop_assert_eq!(morgan_fingerprint(&h, 2, 1024), morgan_fingerprint(&g, 2, 1024));
        let (fg, fh) = (featurize(&g), featurize(&h));
        prop_assert_eq!(sorted_rows(&fg.node_features, NODE_DIM), sorted_rows(&fh.node_features, NODE_DIM));
        prop_assert_eq!(sorted_rows(&fg.edge_features, EDGE_DIM), sorted_rows(&fh.edge_features, EDGE_DIM));
    }

    #[test]
    fn arbitrary_text_never_yields_a_broken_graph(s in "[CNOcnos()=#%0-9\\[\\]+\\-H@/\\\\.]{1,30}") {
        if let Ok(g) = parse_smiles(&s) {
            prop_assert!(g.check_invariants().is_ok(), "{}", s);
            let f = featurize(&g);
            prop_assert!(f.node_features.iter().chain(&f.edge_features).all(|v| v.is_finite()));
            if !g.is_empty() {
                prop_assert!(morgan_fingerprint(&g, 2, 256).count_ones() >= 1);
            }
        }
    }

    #[test]
    fn similarities_are_bounded_and_symmetric(a in 0..MOLECULES.len(), b in 0..MOLECULES.len()) {
        let (ga, gb) = (parse_smiles(MOLECULES[a]).unwrap(), parse_smiles(MOLECULES[b]).unwrap());
        let (fa, fb) = (morgan_fingerprint(&ga, 2, 1024), morgan_fingerprint(&gb, 2, 1024));
        let t = tanimoto(&fa, &fb).unwrap();
        prop_assert!((0.0..=1.0).contains(&t));
        prop_assert_eq!(t, tanimoto(&fb, &fa).unwrap());
        let s = smiles_similarity(MOLECULES[a], MOLECULES[b]).unwrap();
        prop_assert!((0.0..=1.0).contains(&s));
        if a == b {
            prop_assert_eq!(t, 1.0);
            prop_assert_eq!(s, 1.0);
        }
    }
}

#[test]
fn every_listed_molecule_parses_cleanly() {
    for s in MOLECULES {
        let g = parse_smiles(s).unwrap_or_else(|e| panic!("{s}: {e}"));
        g.check_invariants().unwrap();
        assert!(morgan_fingerprint(&g, 2, 1024).count_ones() >= 1);
    }
}

#[test]
fn malformed_inputs_report_offsets() {
    let cases = [
        ("C(", 1, ParseErrorKind::UnclosedBranch),
        ("CC)", 2, ParseErrorKind::UnmatchedBranchClose),
    ];
    for (s, offset, kind) in cases {
        let err = parse_smiles(s).unwrap_err();
        assert_eq!((err.offset, err.kind), (offset, kind), "{s}");
    }
    assert!(parse_smiles("C1CC").is_err());
    assert!(parse_smiles("CXc").is_err());
    assert!(parse_smiles("C(C)(C)(C)(C)C").is_err());
    assert!(parse_smiles("").is_err());
}

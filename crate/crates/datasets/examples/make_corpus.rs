//! Regenerates the bundled data files under `data/`.
//!
//! cargo run -p datasets --example make_corpus

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use chemgraph::write_random_smiles;
use datasets::{motif_regression, random_molecule, GeneratorConfig, Motif};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const KNOWN: &[(&str, &str)] = &[
    ("aspirin", "CC(=O)Oc1ccccc1C(=O)O"),
    ("paracetamol", "CC(=O)Nc1ccc(O)cc1"),
    ("ibuprofen", "CC(C)Cc1ccc(cc1)C(C)C(=O)O"),
    ("caffeine", "Cn1cnc2c1c(=O)n(C)c(=O)n2C"),
    ("naproxen", "COc1ccc2cc(ccc2c1)C(C)C(=O)O"),
    ("diclofenac", "OC(=O)Cc1ccccc1Nc1c(Cl)cccc1Cl"),
    ("metformin", "CN(C)C(=N)NC(=N)N"),
    ("nicotine", "CN1CCCC1c1cccnc1"),
    ("salbutamol", "CC(C)(C)NCC(O)c1ccc(O)c(CO)c1"),
    ("diazepam", "CN1C(=O)CN=C(c2ccccc2)c2cc(Cl)ccc21"),
    ("fluoxetine", "CNCCC(Oc1ccc(cc1)C(F)(F)F)c1ccccc1"),
    ("celecoxib", "Cc1ccc(cc1)-c1cc(nn1-c1ccc(cc1)S(N)(=O)=O)C(F)(F)F"),
    ("lidocaine", "CCN(CC)CC(=O)Nc1c(C)cccc1C"),
    ("procaine", "CCN(CC)CCOC(=O)c1ccc(N)cc1"),
    ("benzocaine", "CCOC(=O)c1ccc(N)cc1"),
    ("phenobarbital", "CCC1(C(=O)NC(=O)NC1=O)c1ccccc1"),
    ("theophylline", "Cn1c2nc[nH]c2c(=O)n(C)c1=O"),
    ("acetanilide", "CC(=O)Nc1ccccc1"),
    ("atenolol", "CC(C)NCC(O)COc1ccc(CC(N)=O)cc1"),
    ("propranolol", "CC(C)NCC(O)COc1cccc2ccccc12"),
    ("metoprolol", "COCCc1ccc(OCC(O)CNC(C)C)cc1"),
    ("warfarin", "CC(=O)CC(c1ccccc1)c1c(O)c2ccccc2oc1=O"),
    ("chloramphenicol", "OCC(NC(=O)C(Cl)Cl)C(O)c1ccc(cc1)[N+](=O)[O-]"),
    ("sulfamethoxazole", "Cc1cc(NS(=O)(=O)c2ccc(N)cc2)no1"),
    ("trimethoprim", "COc1cc(Cc2cnc(N)nc2N)cc(OC)c1OC"),
    ("isoniazid", "NNC(=O)c1ccncc1"),
    ("pyrazinamide", "NC(=O)c1cnccn1"),
    ("ethambutol", "CCC(CO)NCCNC(CC)CO"),
    ("amphetamine", "CC(N)Cc1ccccc1"),
    ("dopamine", "NCCc1ccc(O)c(O)c1"),
    ("serotonin", "NCCc1c[nH]c2ccc(O)cc12"),
    ("histamine", "NCCc1c[nH]cn1"),
    ("adrenaline", "CNCC(O)c1ccc(O)c(O)c1"),
    ("alanine", "N[C@@H](C)C(=O)O"),
    ("tryptophan", "NC(Cc1c[nH]c2ccccc12)C(=O)O"),
    ("tyrosine", "NC(Cc1ccc(O)cc1)C(=O)O"),
    ("urea", "NC(N)=O"),
    ("indole", "c1ccc2[nH]ccc2c1"),
    ("quinoline", "c1ccc2ncccc2c1"),
    ("thiophene", "c1ccsc1"),
    ("furan", "c1ccoc1"),
    ("haloperidol", "OC1(CCN(CCCC(=O)c2ccc(F)cc2)CC1)c1ccc(Cl)cc1"),
    ("carbamazepine", "NC(=O)N1c2ccccc2C=Cc2ccccc21"),
    ("omeprazole", "COc1ccc2[nH]c(nc2c1)S(=O)Cc1ncc(C)c(OC)c1C"),
    ("ciprofloxacin", "OC(=O)c1cn(C2CC2)c2cc(N3CCNCC3)c(F)cc2c1=O"),
    ("metronidazole", "Cc1ncc([N+](=O)[O-])n1CCO"),
    ("tamoxifen", "CCC(=C(c1ccccc1)c1ccc(OCCN(C)C)cc1)c1ccccc1"),
    ("captopril", "CC(CS)C(=O)N1CCCC1C(=O)O"),
    ("valproic_acid", "CCCC(CCC)C(=O)O"),
    ("gabapentin", "NCC1(CC(=O)O)CCCCC1"),
    ("baclofen", "NCC(CC(=O)O)c1ccc(Cl)cc1"),
    ("bupropion", "CC(NC(C)(C)C)C(=O)c1cccc(Cl)c1"),
    ("ketamine", "CNC1(CCCCC1=O)c1ccccc1Cl"),
    ("benzyl_bromide", "BrCc1ccccc1"),
    ("iodobenzene", "Ic1ccccc1"),
    ("triphenylphosphine", "c1ccc(cc1)P(c1ccccc1)c1ccccc1"),
    ("phenylboronic_acid", "OB(O)c1ccccc1"),
    ("tetramethylsilane", "C[Si](C)(C)C"),
    ("dmso", "CS(C)=O"),
    ("trimethyl_phosphate", "COP(=O)(OC)OC"),
    ("trans_butene", "C/C=C/C"),
    ("sodium_acetate", "CC(=O)[O-].[Na+]"),
    ("lithium_chloride", "[Li+].[Cl-]"),
];

fn main() {
    let out = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    fs::create_dir_all(&out).unwrap();
    let cfg = GeneratorConfig::default();

    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let mut corpus = String::from("# desk corpus: known drugs and reagents, then generated drug-like molecules\n");
    for (name, smiles) in KNOWN {
        writeln!(corpus, "{smiles} {name}").unwrap();
    }
    for i in KNOWN.len()..1000 {
        let g = random_molecule(&mut rng, &cfg);
        writeln!(corpus, "{} gen{i:04}", write_random_smiles(&g, &mut rng)).unwrap();
    }
    fs::write(out.join("desk_corpus.smi"), corpus).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut labeled = String::from("smiles,label\n");
    for s in motif_regression(&mut rng, 80, &cfg, Motif::Amide, 0.2) {
        writeln!(labeled, "{},{:.4}", s.smiles, s.y).unwrap();
    }
    fs::write(out.join("fixture_labeled.csv"), labeled).unwrap();

    let mut pool = String::from("# unlabeled fixture pool\n");
    for _ in 0..300 {
        let g = random_molecule(&mut rng, &cfg);
        writeln!(pool, "{}", chemgraph::write_smiles(&g)).unwrap();
    }
    fs::write(out.join("fixture_pool.smi"), pool).unwrap();
}

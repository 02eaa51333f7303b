use std::time::Instant;

use molbench_core::chem::{canonical_key, parse_smiles, render_random_smiles, tokenize};

fn corpus() -> Vec<String> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../molbench/data/desk_corpus.smi");
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .filter_map(|l| l.split_whitespace().next().map(str::to_owned))
        .collect()
}

#[test]
fn every_corpus_molecule_parses_and_round_trips() {
    let start = Instant::now();
    let smiles = corpus();
    let mut failures = Vec::new();
    for (i, s) in smiles.iter().enumerate() {
        let joined: String = tokenize(s).unwrap().iter().map(|t| t.text).collect();
        assert_eq!(&joined, s);
        let mol = match parse_smiles(s) {
            Ok(m) => m,
            Err(e) => {
                failures.push(format!("{s}: {e}"));
                continue;
            }
        };
        let key = canonical_key(&mol);
        let seeds = if i < 500 { 20 } else { 2 };
        for seed in 0..seeds {
            let r = render_random_smiles(&mol, seed);
            let back = parse_smiles(&r).unwrap_or_else(|e| panic!("{s} -> {r}: {e}"));
            assert_eq!(canonical_key(&back), key, "{s} -> {r}");
            assert_eq!(back.total_atom_count(), mol.total_atom_count());
        }
    }
    assert!(failures.is_empty(), "{failures:?}");
    eprintln!("{} molecules in {:?}", smiles.len(), start.elapsed());
}

use molbench_core::chem::{canonical_key, parse_smiles, render_random_smiles};
use molbench_core::descriptors::{crippen_logp, mol_weight};
use molbench_core::fingerprint::{ecfp4, tanimoto, Fingerprint};
use molbench_core::metrics::{
    auc_series, compute_from_scored, padded_mean, recording_points, MetricConfig, ScoredMol,
};
use molbench_core::oracle::{similarity_objective, BudgetedOracle, Candidate, Sequential};
use molbench_core::policy::Vocabulary;
use molbench_core::refstats::FilterVerdict;
use proptest::prelude::*;

/// Acyclic or monocyclic SMILES over a small alphabet; always valid.
fn smiles() -> impl Strategy<Value = String> {
    let atom = prop::sample::select(vec!["C", "N", "O", "C(C)", "C(=O)", "C(Cl)", "C(N)", "S"]);
    (prop::collection::vec(atom, 1..10), any::<bool>()).prop_map(|(atoms, ring)| {
        let mut s = String::from("C");
        if ring && atoms.len() >= 3 {
            s.push('1');
            for a in &atoms[..atoms.len() - 1] {
                s.push_str(a);
            }
            s.push_str("C1");
        } else {
            for a in &atoms {
                s.push_str(a);
            }
        }
        s
    })
}

fn scored() -> impl Strategy<Value = Vec<ScoredMol>> {
    let entry = (0.0f64..=1.0, 1u64..3, prop::collection::vec(0u32..48, 0..12), any::<bool>(), prop::bool::weighted(0.05));
    prop::collection::vec(entry, 0..80).prop_map(|rows| {
        let mut call = 0;
        rows.into_iter()
            .enumerate()
            .map(|(i, (score, gap, bits, pass, no_fp))| {
                call += gap;
                ScoredMol {
                    key: format!("m{i}"),
                    score,
                    first_call: call,
                    fingerprint: (!no_fp).then(|| Fingerprint::from_bits(48, bits)),
                    mw: None,
                    logp: None,
                    verdict: FilterVerdict { pass, reasons: Vec::new() },
                }
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn filtered_and_diverse_pools_never_beat_plain(mols in scored(), interval in 1u64..30, extra in 0u64..20) {
        let last = mols.last().map_or(0, |m| m.first_call);
        let cfg = MetricConfig { record_interval: interval, ..MetricConfig::default() };
        let r = compute_from_scored(&mols, last, last + extra, &cfg).unwrap();
        let s = &r.series;
        for i in 0..s.points.len() {
            prop_assert!(s.filtered[i] <= s.plain[i]);
            prop_assert!(s.diverse[i] <= s.plain[i]);
            prop_assert!(s.combined[i] <= s.filtered[i]);
            prop_assert!((0.0..=1.0).contains(&s.plain[i]));
        }
        prop_assert!(r.auc_filtered <= r.auc_plain && r.auc_diverse <= r.auc_plain);
        prop_assert!(r.auc_combined <= r.auc_filtered);
        for w in s.plain.windows(2) {
            prop_assert!(w[0] <= w[1], "plain top-10 mean never drops");
        }
    }

    #[test]
    fn recording_points_end_at_the_last_call(last in 0u64..5000, interval in 1u64..400) {
        let p = recording_points(last, interval);
        prop_assert!(p.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(p.last().copied().unwrap_or(0), last);
        prop_assert!(p.iter().all(|&x| x % interval == 0 || x == last));
    }

    #[test]
    fn auc_is_bounded_by_the_series(values in prop::collection::vec(0.0f64..=1.0, 1..30), budget_extra in 0u64..50) {
        let points: Vec<(u64, f64)> = values.iter().enumerate().map(|(i, &v)| (3 * i as u64 + 1, v)).collect();
        let budget = points.last().unwrap().0 + budget_extra;
        let auc = auc_series(&points, budget).unwrap();
        let max = values.iter().cloned().fold(0.0, f64::max);
        prop_assert!((0.0..=max + 1e-12).contains(&auc));
        prop_assert!(auc_series(&points, points.last().unwrap().0 - 1).is_err());
    }

    #[test]
    fn padded_mean_is_at_most_the_maximum(mut v in prop::collection::vec(0.0f64..=1.0, 0..25)) {
        v.sort_by(|a, b| b.total_cmp(a));
        let m = padded_mean(v.iter().copied(), 10);
        prop_assert!(m <= v.first().copied().unwrap_or(0.0));
        prop_assert!(m >= 0.0);
    }

    #[test]
    fn renderings_preserve_identity(s in smiles(), seed in any::<u64>()) {
        let mol = parse_smiles(&s).unwrap();
        let back = parse_smiles(&render_random_smiles(&mol, seed)).unwrap();
        prop_assert_eq!(canonical_key(&back), canonical_key(&mol));
        prop_assert_eq!(ecfp4(&back), ecfp4(&mol));
        prop_assert_eq!(mol_weight(&back).unwrap(), mol_weight(&mol).unwrap());
        prop_assert_eq!(crippen_logp(&back), crippen_logp(&mol));
    }

    #[test]
    fn tanimoto_is_a_symmetric_similarity(a in smiles(), b in smiles()) {
        let (fa, fb) = (ecfp4(&parse_smiles(&a).unwrap()), ecfp4(&parse_smiles(&b).unwrap()));
        let ab = tanimoto(&fa, &fb).unwrap();
        prop_assert_eq!(ab, tanimoto(&fb, &fa).unwrap());
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(tanimoto(&fa, &fa).unwrap(), 1.0);
    }

    #[test]
    fn vocabulary_round_trips(lines in prop::collection::vec(smiles(), 1..8)) {
        let v = Vocabulary::from_corpus(lines.iter().map(String::as_str)).unwrap();
        for l in &lines {
            prop_assert_eq!(&v.decode(&v.encode(l).unwrap()), l);
        }
    }

    #[test]
    fn oracle_never_exceeds_its_budget(
        batches in prop::collection::vec(prop::collection::vec(smiles(), 1..12), 1..6),
        budget in 0u64..30,
    ) {
        let mut oracle = BudgetedOracle::new(Box::new(similarity_objective("CCO").unwrap()), budget);
        for batch in &batches {
            let mols: Vec<_> = batch.iter().map(|s| parse_smiles(s).unwrap()).collect();
            let keys: Vec<String> = mols.iter().map(canonical_key).collect();
            let cands: Vec<Candidate> =
                keys.iter().zip(&mols).map(|(key, mol)| Candidate::Molecule { key, mol }).collect();
            let scores = oracle.evaluate_batch(&cands, &Sequential);
            prop_assert!(scores.len() <= cands.len());
            prop_assert!(oracle.calls_used() <= budget);
        }
        let log = oracle.log();
        prop_assert!(log.iter().enumerate().all(|(i, r)| r.call_index == i as u64 + 1));
        let mut keys: Vec<&str> = log.iter().map(|r| r.key.as_str()).collect();
        keys.sort_unstable();
        prop_assert!(keys.windows(2).all(|w| w[0] != w[1]), "each molecule is charged once");
    }
}

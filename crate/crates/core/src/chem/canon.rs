//! Canonical identity keys and randomized re-renderings.
//!
//! Atoms are ranked by iterative invariant refinement seeded with
//! (element, degree, charge, hydrogen count, aromaticity, isotope). Remaining
//! ties are broken by trying every member of the first tied class and keeping
//! the lexicographically smallest rendering.

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::mol::Molecule;
use super::write::write_smiles;

/// Upper bound on complete labelings explored during tie-breaking. Past this
/// only the first member of each tied class is tried, which is exact whenever
/// the tied atoms are symmetry-equivalent (the usual case after refinement).
const LEAF_LIMIT: usize = 256;

/// Deterministic string identity of the molecular graph, invariant under
/// atom reordering. The key is itself a valid SMILES string.
pub fn canonical_key(mol: &Molecule) -> String {
    if mol.atom_count() == 0 {
        return String::new();
    }
    let ranks = canonical_ranks_seed(mol);
    let mut leaves = 0;
    let mut best = None;
    search(mol, ranks, &mut leaves, &mut best);
    best.unwrap_or_default()
}

/// SMILES for `mol` with the traversal order shuffled by `seed`. Re-parsing
/// the output yields a molecule with the same canonical key.
pub fn render_random_smiles(mol: &Molecule, seed: u64) -> String {
    let mut order: Vec<u32> = (0..mol.atom_count() as u32).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    write_smiles(mol, &order)
}

/// Refined canonical class of each atom (equal values mean the refinement
/// could not distinguish the atoms).
pub fn symmetry_classes(mol: &Molecule) -> Vec<u32> {
    refine(mol, canonical_ranks_seed(mol)).0
}

fn canonical_ranks_seed(mol: &Molecule) -> Vec<u32> {
    let seeds: Vec<_> = mol
        .atoms()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            (
                a.atomic_number,
                mol.degree(i),
                a.formal_charge,
                a.hydrogen_count(),
                a.aromatic,
                a.isotope.unwrap_or(0),
            )
        })
        .collect();
    dense_ranks(&seeds)
}

fn dense_ranks<K: Ord>(keys: &[K]) -> Vec<u32> {
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    idx.sort_by(|&a, &b| keys[a].cmp(&keys[b]));
    let mut ranks = alloc::vec![0u32; keys.len()];
    let mut r = 0;
    for w in 0..idx.len() {
        if w > 0 && keys[idx[w]] != keys[idx[w - 1]] {
            r += 1;
        }
        ranks[idx[w]] = r;
    }
    ranks
}

/// Refine until the number of classes stops growing. Returns the ranks and
/// the class count.
fn refine(mol: &Molecule, mut ranks: Vec<u32>) -> (Vec<u32>, usize) {
    let mut classes = count_classes(&ranks);
    loop {
        let keys: Vec<(u32, Vec<(u8, u32)>)> = (0..mol.atom_count())
            .map(|a| {
                let mut env: Vec<(u8, u32)> = mol
                    .neighbors(a)
                    .iter()
                    .map(|&(n, b)| (mol.bonds()[b].order.code(), ranks[n]))
                    .collect();
                env.sort_unstable();
                (ranks[a], env)
            })
            .collect();
        let next = dense_ranks(&keys);
        let next_classes = count_classes(&next);
        ranks = next;
        if next_classes == classes {
            return (ranks, classes);
        }
        classes = next_classes;
    }
}

fn count_classes(ranks: &[u32]) -> usize {
    ranks.iter().copied().max().map_or(0, |m| m as usize + 1)
}

fn search(mol: &Molecule, ranks: Vec<u32>, leaves: &mut usize, best: &mut Option<String>) {
    let (ranks, classes) = refine(mol, ranks);
    if classes == mol.atom_count() {
        *leaves += 1;
        let s = write_smiles(mol, &ranks);
        if best.as_ref().is_none_or(|b| s < *b) {
            *best = Some(s);
        }
        return;
    }
    let mut counts = alloc::vec![0usize; classes];
    for &r in &ranks {
        counts[r as usize] += 1;
    }
    let tied = counts.iter().position(|&c| c > 1).unwrap() as u32;
    let candidates: Vec<usize> = (0..ranks.len()).filter(|&a| ranks[a] == tied).collect();
    for (i, &chosen) in candidates.iter().enumerate() {
        if i > 0 && *leaves >= LEAF_LIMIT {
            break;
        }
        let split: Vec<u32> = ranks
            .iter()
            .enumerate()
            .map(|(a, &r)| 2 * r + u32::from(r == tied && a != chosen))
            .collect();
        search(mol, split, leaves, best);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;
    use alloc::collections::BTreeSet;

    fn key(s: &str) -> String {
        canonical_key(&parse_smiles(s).unwrap())
    }

    #[test]
    fn reordered_renderings_share_a_key() {
        assert_eq!(key("OCC"), key("CCO"));
        assert_ne!(key("CCO"), key("CCN"));
        assert_eq!(key("c1ccccc1O"), key("Oc1ccccc1"));
        assert_eq!(key("C1CCCCC1C(=O)O"), key("OC(=O)C1CCCCC1"));
        assert_eq!(key("[Na+].[Cl-]"), key("[Cl-].[Na+]"));
    }

    #[test]
    fn key_reparses_to_itself() {
        for s in ["CC(=O)Oc1ccccc1C(=O)O", "c1ccc2c(c1)[nH]c1ccccc12", "C[N+](C)(C)C", "[13CH4]", "CC#N"] {
            let k = key(s);
            assert_eq!(key(&k), k, "{s}");
        }
    }

    #[test]
    fn distinguishes_isomers() {
        assert_ne!(key("Cc1ccccc1C"), key("Cc1cccc(C)c1"));
        assert_ne!(key("Cc1cccc(C)c1"), key("Cc1ccc(C)cc1"));
        assert_ne!(key("C=CC"), key("C1CC1"));
        assert_ne!(key("[CH2]C"), key("CC"));
        assert_eq!(key("[CH3]C"), key("CC"));
    }

    #[test]
    fn single_atom_has_one_rendering() {
        let m = parse_smiles("C").unwrap();
        assert_eq!(render_random_smiles(&m, 0), "C");
        assert_eq!(canonical_key(&m), "C");
    }

    #[test]
    fn random_renderings_round_trip() {
        let smiles = "CC(C)Cc1ccc(cc1)C(C)C(=O)OCC[N+](C)(C)C.[Cl-]";
        let mol = parse_smiles(smiles).unwrap();
        let k = canonical_key(&mol);
        let mut seen = BTreeSet::new();
        for seed in 0..100 {
            let r = render_random_smiles(&mol, seed);
            let back = parse_smiles(&r).unwrap_or_else(|e| panic!("{r}: {e}"));
            assert_eq!(canonical_key(&back), k, "{r}");
            assert_eq!(back.total_atom_count(), mol.total_atom_count());
            seen.insert(r);
        }
        assert!(seen.len() > 10);
    }

    #[test]
    fn ring_renderings_vary_but_keys_agree() {
        let mol = parse_smiles("C1CCCCCCCCC1").unwrap();
        let a = render_random_smiles(&mol, 1);
        let b = render_random_smiles(&mol, 2);
        assert_eq!(key(&a), key(&b));
    }
}

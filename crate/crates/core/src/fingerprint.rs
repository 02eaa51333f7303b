//! ECFP-style hashed circular fingerprints and Tanimoto similarity.
//!
//! Identifiers are FNV-1a 64-bit hashes over a fixed little-endian byte
//! layout, so bits are identical on every platform and run.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::chem::Molecule;

pub const DEFAULT_RADIUS: u32 = 2;
pub const DEFAULT_WIDTH: u32 = 2048;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fingerprint {
    width: u32,
    on_bits: Vec<u32>,
}

impl Fingerprint {
    /// Build from arbitrary bit indices; they are sorted and deduplicated.
    /// Panics if an index is out of range.
    pub fn from_bits(width: u32, mut bits: Vec<u32>) -> Self {
        bits.sort_unstable();
        bits.dedup();
        assert!(bits.last().is_none_or(|&b| b < width), "bit index out of range");
        Fingerprint { width, on_bits: bits }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    /// Sorted, deduplicated on-bit indices.
    pub fn on_bits(&self) -> &[u32] {
        &self.on_bits
    }

    pub fn count(&self) -> usize {
        self.on_bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.on_bits.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WidthMismatch {
    pub left: u32,
    pub right: u32,
}

impl fmt::Display for WidthMismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "fingerprint widths differ ({} vs {})", self.left, self.right)
    }
}

impl core::error::Error for WidthMismatch {}

pub(crate) struct Fnv(u64);

impl Fnv {
    pub(crate) fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }

    pub(crate) fn bytes(&mut self, bytes: &[u8]) -> &mut Self {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
        self
    }

    pub(crate) fn u64(&mut self, v: u64) -> &mut Self {
        self.bytes(&v.to_le_bytes())
    }

    pub(crate) fn finish(&self) -> u64 {
        self.0
    }
}

/// Radius-0 identifier of each atom: (atomic number, heavy degree, total H,
/// formal charge, ring flag, aromatic flag).
fn initial_identifiers(mol: &Molecule) -> Vec<u64> {
    (0..mol.atom_count())
        .map(|i| {
            let a = &mol.atoms()[i];
            let mut h = Fnv::new();
            h.bytes(&[a.atomic_number])
                .u64(mol.heavy_degree(i) as u64)
                .u64(mol.total_h(i) as u64)
                .bytes(&[a.formal_charge as u8, mol.is_ring_atom(i) as u8, a.aromatic as u8]);
            h.finish()
        })
        .collect()
}

/// Distinct circular environments as `(radius, identifier)`; an environment
/// whose atom set was already covered keeps only its smallest radius (and at
/// equal radius the smallest identifier). Hydrogen graph nodes are skipped as
/// centers but appear in their neighbors' hydrogen counts.
pub fn environments(mol: &Molecule, radius: u32) -> Vec<(u32, u64)> {
    let n = mol.atom_count();
    let centers: Vec<usize> = (0..n).filter(|&i| mol.atoms()[i].atomic_number != 1).collect();
    let words = n.div_ceil(64).max(1);
    let mut ids = initial_identifiers(mol);
    // Atom set covered by each center's current environment.
    let mut cover: Vec<Vec<u64>> = (0..n)
        .map(|i| {
            let mut s = vec![0u64; words];
            s[i / 64] |= 1 << (i % 64);
            s
        })
        .collect();
    let mut found: Vec<(u32, Vec<u64>, u64)> = centers.iter().map(|&i| (0, cover[i].clone(), ids[i])).collect();

    for r in 1..=radius {
        let mut next = ids.clone();
        let mut next_cover = cover.clone();
        for &i in &centers {
            let mut env: Vec<(u8, u64)> = mol
                .neighbors(i)
                .iter()
                .filter(|&&(nb, _)| mol.atoms()[nb].atomic_number != 1)
                .map(|&(nb, b)| (mol.bonds()[b].order.code(), ids[nb]))
                .collect();
            env.sort_unstable();
            let mut h = Fnv::new();
            h.u64(r as u64).u64(ids[i]);
            for &(code, id) in &env {
                h.bytes(&[code]).u64(id);
            }
            next[i] = h.finish();
            for &(nb, _) in mol.neighbors(i) {
                if mol.atoms()[nb].atomic_number == 1 {
                    continue;
                }
                for w in 0..words {
                    next_cover[i][w] |= cover[nb][w];
                }
            }
            found.push((r, next_cover[i].clone(), next[i]));
        }
        ids = next;
        cover = next_cover;
    }

    found.sort_unstable_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)).then(a.2.cmp(&b.2)));
    found.dedup_by(|later, first| later.1 == first.1);
    found.into_iter().map(|(r, _, id)| (r, id)).collect()
}

/// Hashed circular fingerprint; each surviving environment sets bit
/// `identifier mod width`. `width` must be a power of two.
pub fn ecfp(mol: &Molecule, radius: u32, width: u32) -> Fingerprint {
    assert!(width.is_power_of_two(), "fingerprint width must be a power of two");
    let bits = environments(mol, radius).into_iter().map(|(_, id)| (id % width as u64) as u32).collect();
    Fingerprint::from_bits(width, bits)
}

/// ECFP4 at the default width.
pub fn ecfp4(mol: &Molecule) -> Fingerprint {
    ecfp(mol, DEFAULT_RADIUS, DEFAULT_WIDTH)
}

/// |A∩B| / |A∪B|; zero when both are empty.
pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> Result<f64, WidthMismatch> {
    if a.width != b.width {
        return Err(WidthMismatch { left: a.width, right: b.width });
    }
    let common = intersection_count(&a.on_bits, &b.on_bits);
    let union = a.on_bits.len() + b.on_bits.len() - common;
    Ok(if union == 0 { 0.0 } else { common as f64 / union as f64 })
}

pub(crate) fn intersection_count(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            core::cmp::Ordering::Less => i += 1,
            core::cmp::Ordering::Greater => j += 1,
            core::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

//! Molecular weight, Wildman–Crippen LogP and element counts.
//!
//! Every quantity is accumulated as per-category counts first and summed in a
//! fixed category order, so results are bit-identical for any atom ordering
//! of the same graph.

use alloc::collections::BTreeMap;
use core::fmt;

use crate::chem::{element, Molecule};

mod crippen;

pub use crippen::{atom_types, CrippenType};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DescriptorError {
    /// The element has no standard atomic weight and no isotope was given.
    UnknownElementMass { element: &'static str },
}

impl fmt::Display for DescriptorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DescriptorError::UnknownElementMass { element } => {
                write!(f, "no standard atomic weight for {element}")
            }
        }
    }
}

impl core::error::Error for DescriptorError {}

#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorVector {
    pub mol_weight: f64,
    pub logp: f64,
    /// Includes attached hydrogens under `"H"`.
    pub element_counts: BTreeMap<&'static str, u32>,
    pub heavy_atom_count: u32,
}

/// All descriptors in one pass.
pub fn describe(mol: &Molecule) -> Result<DescriptorVector, DescriptorError> {
    Ok(DescriptorVector {
        mol_weight: mol_weight(mol)?,
        logp: crippen_logp(mol),
        element_counts: element_counts(mol),
        heavy_atom_count: mol.atoms().iter().filter(|a| a.atomic_number != 1).count() as u32,
    })
}

/// Sum of standard atomic weights including attached hydrogens. An atom with
/// an isotope label contributes its mass number instead.
pub fn mol_weight(mol: &Molecule) -> Result<f64, DescriptorError> {
    // (atomic number, isotope or 0) -> count
    let mut counts: BTreeMap<(u8, u16), u32> = BTreeMap::new();
    for atom in mol.atoms() {
        *counts.entry((atom.atomic_number, atom.isotope.unwrap_or(0))).or_default() += 1;
        if atom.hydrogen_count() > 0 {
            *counts.entry((1, 0)).or_default() += atom.hydrogen_count() as u32;
        }
    }
    let mut total = 0.0;
    for (&(z, iso), &n) in &counts {
        let mass = if iso > 0 {
            iso as f64
        } else {
            element::standard_weight(z)
                .ok_or(DescriptorError::UnknownElementMass { element: element::symbol(z) })?
        };
        total += n as f64 * mass;
    }
    Ok(total)
}

/// Wildman–Crippen octanol/water LogP: the sum of atom-type contributions over
/// heavy atoms and hydrogens. Total: every atom gets exactly one type.
pub fn crippen_logp(mol: &Molecule) -> f64 {
    let mut counts = [0u32; CrippenType::COUNT];
    for (heavy, hydrogen, n_h) in atom_types(mol) {
        counts[heavy as usize] += 1;
        if let Some(h) = hydrogen {
            counts[h as usize] += n_h as u32;
        }
    }
    CrippenType::ALL
        .iter()
        .zip(counts)
        .filter(|&(_, n)| n > 0)
        .map(|(t, n)| n as f64 * t.contribution())
        .sum()
}

/// Element symbol to count, with attached hydrogens under `"H"`. Isotopes are
/// counted under their element.
pub fn element_counts(mol: &Molecule) -> BTreeMap<&'static str, u32> {
    let mut counts = BTreeMap::new();
    for atom in mol.atoms() {
        *counts.entry(atom.symbol()).or_default() += 1;
        if atom.hydrogen_count() > 0 {
            *counts.entry("H").or_default() += atom.hydrogen_count() as u32;
        }
    }
    counts
}

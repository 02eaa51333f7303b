//! Core algorithms for budgeted molecular optimization benchmarks.
//!
//! Everything here is allocation-only and free of IO: SMILES graphs and
//! canonical keys, descriptors, circular fingerprints, reference statistics
//! and the property filter, scoring objectives with a budgeted oracle, a GRU
//! language-model policy with its own reverse-mode gradient tape, the
//! optimization loops, and the AUC Top-10 metric family.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod chem;
pub mod descriptors;
pub mod exec;
pub mod fingerprint;
pub mod metrics;
pub mod optimize;
pub mod oracle;
pub mod policy;
pub mod refstats;

//! Reference-corpus statistics and the property filter built on them.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::chem::Molecule;
use crate::descriptors::{crippen_logp, mol_weight, DescriptorError};
use crate::fingerprint::{ecfp, Fingerprint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FingerprintParams {
    pub radius: u32,
    pub width: u32,
}

impl Default for FingerprintParams {
    fn default() -> Self {
        FingerprintParams { radius: crate::fingerprint::DEFAULT_RADIUS, width: crate::fingerprint::DEFAULT_WIDTH }
    }
}

/// Population mean and standard deviation of MW and LogP plus every
/// fingerprint bit seen in the corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceStats {
    pub mw_mean: f64,
    pub mw_std: f64,
    pub logp_mean: f64,
    pub logp_std: f64,
    pub n_molecules: u64,
    /// Corpus records that did not yield a molecule.
    pub skipped: u64,
    pub fp_radius: u32,
    pub fp_width: u32,
    pub source_digest: String,
    /// Sorted, deduplicated.
    pub bit_universe: Vec<u32>,
}

impl ReferenceStats {
    pub fn params(&self) -> FingerprintParams {
        FingerprintParams { radius: self.fp_radius, width: self.fp_width }
    }

    pub fn contains_bit(&self, bit: u32) -> bool {
        self.bit_universe.binary_search(&bit).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StatsError {
    EmptyCorpus,
    /// A standard deviation came out as zero (or not finite).
    DegenerateStats { quantity: &'static str },
    ParamMismatch { expected: FingerprintParams, found: FingerprintParams },
    EmptyFingerprint,
    Descriptor(DescriptorError),
}

impl fmt::Display for StatsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatsError::EmptyCorpus => write!(f, "corpus contains fewer than two usable molecules"),
            StatsError::DegenerateStats { quantity } => write!(f, "{quantity} has zero spread over the corpus"),
            StatsError::ParamMismatch { expected, found } => write!(
                f,
                "fingerprint parameters differ: stats use radius {} width {}, got radius {} width {}",
                expected.radius, expected.width, found.radius, found.width
            ),
            StatsError::EmptyFingerprint => write!(f, "fingerprint has no on-bits"),
            StatsError::Descriptor(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for StatsError {}

impl From<DescriptorError> for StatsError {
    fn from(e: DescriptorError) -> Self {
        StatsError::Descriptor(e)
    }
}

/// Per-molecule values a corpus contributes to its statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub mw: f64,
    pub logp: f64,
    pub fingerprint: Fingerprint,
}

impl Observation {
    pub fn of(mol: &Molecule, params: FingerprintParams) -> Result<Self, DescriptorError> {
        Ok(Observation {
            mw: mol_weight(mol)?,
            logp: crippen_logp(mol),
            fingerprint: ecfp(mol, params.radius, params.width),
        })
    }
}

/// Order-independent reduction of observations. Partial accumulators can be
/// merged in any order and produce bit-identical statistics, since values are
/// sorted before summation and bits are a set union.
#[derive(Debug, Clone)]
pub struct StatsAccumulator {
    params: FingerprintParams,
    mw: Vec<f64>,
    logp: Vec<f64>,
    bits: Vec<u64>,
    skipped: u64,
}

impl StatsAccumulator {
    pub fn new(params: FingerprintParams) -> Self {
        StatsAccumulator {
            params,
            mw: Vec::new(),
            logp: Vec::new(),
            bits: vec![0; (params.width as usize).div_ceil(64)],
            skipped: 0,
        }
    }

    pub fn add(&mut self, obs: &Observation) -> Result<(), StatsError> {
        if obs.fingerprint.width() != self.params.width {
            let found = FingerprintParams { radius: self.params.radius, width: obs.fingerprint.width() };
            return Err(StatsError::ParamMismatch { expected: self.params, found });
        }
        self.mw.push(obs.mw);
        self.logp.push(obs.logp);
        for &b in obs.fingerprint.on_bits() {
            self.bits[b as usize / 64] |= 1 << (b % 64);
        }
        Ok(())
    }

    /// Count a record that produced no molecule.
    pub fn skip(&mut self) {
        self.skipped += 1;
    }

    pub fn merge(&mut self, other: StatsAccumulator) -> Result<(), StatsError> {
        if other.params != self.params {
            return Err(StatsError::ParamMismatch { expected: self.params, found: other.params });
        }
        self.mw.extend(other.mw);
        self.logp.extend(other.logp);
        for (a, b) in self.bits.iter_mut().zip(other.bits) {
            *a |= b;
        }
        self.skipped += other.skipped;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.mw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mw.is_empty()
    }

    pub fn finish(self, source_digest: String) -> Result<ReferenceStats, StatsError> {
        if self.mw.len() < 2 {
            return Err(StatsError::EmptyCorpus);
        }
        let n_molecules = self.mw.len() as u64;
        let (mw_mean, mw_std) = mean_std(self.mw);
        let (logp_mean, logp_std) = mean_std(self.logp);
        for (quantity, std) in [("molecular weight", mw_std), ("logp", logp_std)] {
            if !(std > 0.0 && std.is_finite()) {
                return Err(StatsError::DegenerateStats { quantity });
            }
        }
        let bit_universe: Vec<u32> = (0..self.params.width)
            .filter(|&b| self.bits[b as usize / 64] >> (b % 64) & 1 == 1)
            .collect();
        Ok(ReferenceStats {
            mw_mean,
            mw_std,
            logp_mean,
            logp_std,
            n_molecules,
            skipped: self.skipped,
            fp_radius: self.params.radius,
            fp_width: self.params.width,
            source_digest,
            bit_universe,
        })
    }
}

/// Population mean and standard deviation with sorted summation.
fn mean_std(mut xs: Vec<f64>) -> (f64, f64) {
    let n = xs.len() as f64;
    xs.sort_unstable_by(f64::total_cmp);
    if xs.first() == xs.last() {
        return (xs[0], 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n;
    let mut dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    dev.sort_unstable_by(f64::total_cmp);
    (mean, libm::sqrt(dev.iter().sum::<f64>() / n))
}

/// Statistics over already parsed molecules. Molecules whose descriptors
/// cannot be computed count as skipped.
pub fn build_stats<'a>(
    molecules: impl IntoIterator<Item = &'a Molecule>,
    params: FingerprintParams,
    skipped: u64,
    source_digest: String,
) -> Result<ReferenceStats, StatsError> {
    let mut acc = StatsAccumulator::new(params);
    for _ in 0..skipped {
        acc.skip();
    }
    for mol in molecules {
        match Observation::of(mol, params) {
            Ok(obs) => acc.add(&obs)?,
            Err(_) => acc.skip(),
        }
    }
    acc.finish(source_digest)
}

/// Share of on-bits never seen in the reference corpus.
pub fn denovo_fraction(fp: &Fingerprint, stats: &ReferenceStats) -> Result<f64, StatsError> {
    if fp.width() != stats.fp_width {
        let found = FingerprintParams { radius: stats.fp_radius, width: fp.width() };
        return Err(StatsError::ParamMismatch { expected: stats.params(), found });
    }
    if fp.is_empty() {
        return Err(StatsError::EmptyFingerprint);
    }
    let novel = fp.on_bits().iter().filter(|&&b| !stats.contains_bit(b)).count();
    Ok(novel as f64 / fp.count() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub k_sigma: f64,
    pub denovo_max: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig { k_sigma: 4.0, denovo_max: 0.10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterReason {
    MwLow,
    MwHigh,
    LogpLow,
    LogpHigh,
    DenovoBits,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterVerdict {
    pub pass: bool,
    pub reasons: Vec<FilterReason>,
}

impl FilterVerdict {
    fn from_reasons(reasons: Vec<FilterReason>) -> Self {
        FilterVerdict { pass: reasons.is_empty(), reasons }
    }
}

/// Closed-interval MW and LogP bounds at `k_sigma` plus the de novo bit cap.
pub fn property_filter(mol: &Molecule, stats: &ReferenceStats, cfg: FilterConfig) -> Result<FilterVerdict, StatsError> {
    let obs = Observation::of(mol, stats.params())?;
    filter_observation(&obs, stats, cfg)
}

/// The filter over precomputed values.
pub fn filter_observation(obs: &Observation, stats: &ReferenceStats, cfg: FilterConfig) -> Result<FilterVerdict, StatsError> {
    let mut reasons = Vec::new();
    let (lo, hi) = bounds(stats.mw_mean, stats.mw_std, cfg.k_sigma);
    if obs.mw < lo {
        reasons.push(FilterReason::MwLow);
    }
    if obs.mw > hi {
        reasons.push(FilterReason::MwHigh);
    }
    let (lo, hi) = bounds(stats.logp_mean, stats.logp_std, cfg.k_sigma);
    if obs.logp < lo {
        reasons.push(FilterReason::LogpLow);
    }
    if obs.logp > hi {
        reasons.push(FilterReason::LogpHigh);
    }
    if denovo_fraction(&obs.fingerprint, stats)? > cfg.denovo_max {
        reasons.push(FilterReason::DenovoBits);
    }
    Ok(FilterVerdict::from_reasons(reasons))
}

fn bounds(mean: f64, std: f64, k: f64) -> (f64, f64) {
    (mean - k * std, mean + k * std)
}

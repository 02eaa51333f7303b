//! Scoring objectives and the budgeted, caching oracle wrapper.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::chem::{parse_smiles, Molecule, SmilesError};
use crate::descriptors::{crippen_logp, element_counts, mol_weight};
use crate::fingerprint::{ecfp4, tanimoto, Fingerprint};

/// A molecule scoring function with values in [0, 1]. Implementations must
/// be pure: the same molecule always gets the same score.
pub trait Objective: Send + Sync {
    fn name(&self) -> &str;
    fn score(&self, mol: &Molecule) -> f64;
}

/// Maps a raw property value into [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScoreModifier {
    /// `exp(-((x - mu) / sigma)^2 / 2)`.
    Gaussian { mu: f64, sigma: f64 },
    /// 1 when `x >= t`, else 0.
    MinThreshold { t: f64 },
    /// 1 when `x <= t`, else 0.
    MaxThreshold { t: f64 },
    /// `x` clamped to [0, 1].
    Identity,
}

impl ScoreModifier {
    pub fn apply(&self, x: f64) -> f64 {
        let y = match *self {
            ScoreModifier::Gaussian { mu, sigma } => {
                let d = (x - mu) / sigma;
                libm::exp(-0.5 * d * d)
            }
            ScoreModifier::MinThreshold { t } => f64::from(u8::from(x >= t)),
            ScoreModifier::MaxThreshold { t } => f64::from(u8::from(x <= t)),
            ScoreModifier::Identity => x,
        };
        if y.is_nan() {
            0.0
        } else {
            y.clamp(0.0, 1.0)
        }
    }
}

/// Raw value a component reads from a molecule.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Similarity { target: String, fingerprint: Fingerprint },
    MolWeight,
    LogP,
    Element(String),
    TotalAtoms,
}

impl Source {
    pub fn value(&self, mol: &Molecule) -> f64 {
        match self {
            Source::Similarity { fingerprint, .. } => tanimoto(&ecfp4(mol), fingerprint).unwrap_or(0.0),
            // A molecule without a defined mass scores as far from any target.
            Source::MolWeight => mol_weight(mol).unwrap_or(f64::NAN),
            Source::LogP => crippen_logp(mol),
            Source::Element(sym) => element_counts(mol).get(sym.as_str()).copied().unwrap_or(0) as f64,
            Source::TotalAtoms => mol.total_atom_count() as f64,
        }
    }
}

/// Geometric mean of modified components.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeObjective {
    pub name: String,
    pub components: Vec<(Source, ScoreModifier)>,
}

impl Objective for CompositeObjective {
    fn name(&self) -> &str {
        &self.name
    }

    fn score(&self, mol: &Molecule) -> f64 {
        let parts: Vec<f64> = self.components.iter().map(|(s, m)| m.apply(s.value(mol))).collect();
        geometric_mean(&parts)
    }
}

fn geometric_mean(parts: &[f64]) -> f64 {
    match parts {
        [] => 0.0,
        [only] => *only,
        _ if parts.iter().any(|&p| p <= 0.0) => 0.0,
        _ => {
            let mean_log = parts.iter().map(|&p| libm::log(p)).sum::<f64>() / parts.len() as f64;
            libm::exp(mean_log).clamp(0.0, 1.0)
        }
    }
}

/// Tanimoto similarity of ECFP4 fingerprints to a target molecule.
pub fn similarity_objective(target: &str) -> Result<CompositeObjective, SmilesError> {
    let source = similarity_source(target)?;
    Ok(CompositeObjective {
        name: ["similarity:", target].concat(),
        components: alloc::vec![(source, ScoreModifier::Identity)],
    })
}

fn similarity_source(target: &str) -> Result<Source, SmilesError> {
    let mol = parse_smiles(target)?;
    Ok(Source::Similarity { target: target.to_string(), fingerprint: ecfp4(&mol) })
}

/// Per-element Gaussians (sigma 1) plus a total-atom Gaussian (sigma 2).
pub fn isomer_objective(formula: &BTreeMap<String, u32>) -> CompositeObjective {
    let mut components: Vec<(Source, ScoreModifier)> = formula
        .iter()
        .map(|(el, &n)| (Source::Element(el.clone()), ScoreModifier::Gaussian { mu: n as f64, sigma: 1.0 }))
        .collect();
    let total: u32 = formula.values().sum();
    components.push((Source::TotalAtoms, ScoreModifier::Gaussian { mu: total as f64, sigma: 2.0 }));
    let mut name = String::from("isomer:");
    for (el, n) in formula {
        name.push_str(el);
        name.push_str(&n.to_string());
    }
    CompositeObjective { name, components }
}

/// Objective definition as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSpec {
    pub name: String,
    pub components: Vec<ComponentSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    /// `similarity:<SMILES>`, `mw`, `logp`, `element:<symbol>` or `total_atoms`.
    pub source: String,
    pub modifier: ModifierSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModifierSpec {
    /// `gaussian`, `min_threshold`, `max_threshold` or `identity`.
    pub kind: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveError {
    NoComponents,
    UnknownSource(String),
    UnknownModifier(String),
    BadParameter { modifier: String, detail: &'static str },
    Target(SmilesError),
}

impl fmt::Display for ObjectiveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObjectiveError::NoComponents => write!(f, "objective has no components"),
            ObjectiveError::UnknownSource(s) => write!(f, "unknown component source {s:?}"),
            ObjectiveError::UnknownModifier(s) => write!(f, "unknown modifier kind {s:?}"),
            ObjectiveError::BadParameter { modifier, detail } => write!(f, "modifier {modifier}: {detail}"),
            ObjectiveError::Target(e) => write!(f, "similarity target: {e}"),
        }
    }
}

impl core::error::Error for ObjectiveError {}

impl ObjectiveSpec {
    pub fn build(&self) -> Result<CompositeObjective, ObjectiveError> {
        if self.components.is_empty() {
            return Err(ObjectiveError::NoComponents);
        }
        let components = self
            .components
            .iter()
            .map(|c| Ok((parse_source(&c.source)?, parse_modifier(&c.modifier)?)))
            .collect::<Result<_, ObjectiveError>>()?;
        Ok(CompositeObjective { name: self.name.clone(), components })
    }
}

fn parse_source(text: &str) -> Result<Source, ObjectiveError> {
    if let Some(target) = text.strip_prefix("similarity:") {
        return similarity_source(target).map_err(ObjectiveError::Target);
    }
    if let Some(sym) = text.strip_prefix("element:") {
        if crate::chem::element::from_symbol(sym).is_none() {
            return Err(ObjectiveError::UnknownSource(text.to_string()));
        }
        return Ok(Source::Element(sym.to_string()));
    }
    match text {
        "mw" => Ok(Source::MolWeight),
        "logp" => Ok(Source::LogP),
        "total_atoms" => Ok(Source::TotalAtoms),
        _ => Err(ObjectiveError::UnknownSource(text.to_string())),
    }
}

fn parse_modifier(spec: &ModifierSpec) -> Result<ScoreModifier, ObjectiveError> {
    let bad = |detail| ObjectiveError::BadParameter { modifier: spec.kind.clone(), detail };
    let get = |key: &str| spec.params.get(key).copied().filter(|v| v.is_finite());
    let expect_keys = |keys: &[&str]| {
        if spec.params.keys().all(|k| keys.contains(&k.as_str())) {
            Ok(())
        } else {
            Err(bad("unexpected parameter"))
        }
    };
    match spec.kind.as_str() {
        "gaussian" => {
            expect_keys(&["mu", "sigma"])?;
            let mu = get("mu").ok_or(bad("needs finite mu"))?;
            let sigma = get("sigma").ok_or(bad("needs finite sigma"))?;
            if sigma <= 0.0 {
                return Err(bad("sigma must be positive"));
            }
            Ok(ScoreModifier::Gaussian { mu, sigma })
        }
        "min_threshold" | "max_threshold" => {
            expect_keys(&["t"])?;
            let t = get("t").ok_or(bad("needs finite t"))?;
            Ok(if spec.kind == "min_threshold" { ScoreModifier::MinThreshold { t } } else { ScoreModifier::MaxThreshold { t } })
        }
        "identity" => {
            expect_keys(&[])?;
            Ok(ScoreModifier::Identity)
        }
        other => Err(ObjectiveError::UnknownModifier(other.to_string())),
    }
}

/// One entry of the oracle log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRecord {
    /// 1-based, gap-free.
    pub call_index: u64,
    /// Canonical key for molecules; the raw sampled text for charged invalid
    /// samples.
    #[serde(alias = "smiles")]
    pub key: String,
    pub score: f64,
    #[serde(default = "yes", skip_serializing_if = "is_yes")]
    pub valid: bool,
}

fn yes() -> bool {
    true
}

fn is_yes(v: &bool) -> bool {
    *v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BudgetExhausted;

impl fmt::Display for BudgetExhausted {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "oracle budget exhausted")
    }
}

impl core::error::Error for BudgetExhausted {}

/// Scores a slice of molecules; lets callers fan the pure objective out over
/// threads while the oracle keeps accounting serial.
pub trait BatchScorer {
    fn score_all(&self, objective: &dyn Objective, mols: &[&Molecule]) -> Vec<f64>;
}

pub struct Sequential;

impl BatchScorer for Sequential {
    fn score_all(&self, objective: &dyn Objective, mols: &[&Molecule]) -> Vec<f64> {
        mols.iter().map(|m| objective.score(m)).collect()
    }
}

/// A candidate offered to the oracle in sample order.
pub enum Candidate<'a> {
    Molecule { key: &'a str, mol: &'a Molecule },
    Invalid { text: &'a str },
}

/// Caches scores by canonical key and charges the budget once per unique
/// molecule.
pub struct BudgetedOracle {
    inner: Box<dyn Objective>,
    budget: u64,
    charge_invalid: bool,
    cache: BTreeMap<String, f64>,
    log: Vec<OracleRecord>,
}

impl BudgetedOracle {
    pub fn new(inner: Box<dyn Objective>, budget: u64) -> Self {
        BudgetedOracle { inner, budget, charge_invalid: false, cache: BTreeMap::new(), log: Vec::new() }
    }

    /// Make unparseable samples consume budget (scored 0, cached by text).
    pub fn charging_invalid(mut self, charge: bool) -> Self {
        self.charge_invalid = charge;
        self
    }

    pub fn objective(&self) -> &dyn Objective {
        self.inner.as_ref()
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn calls_used(&self) -> u64 {
        self.log.len() as u64
    }

    pub fn exhausted(&self) -> bool {
        self.calls_used() >= self.budget
    }

    pub fn log(&self) -> &[OracleRecord] {
        &self.log
    }

    pub fn into_log(self) -> Vec<OracleRecord> {
        self.log
    }

    pub fn cached(&self, key: &str) -> Option<f64> {
        self.cache.get(key).copied()
    }

    /// Score one molecule. Cached keys are free.
    pub fn evaluate(&mut self, key: &str, mol: &Molecule) -> Result<f64, BudgetExhausted> {
        let out = self.evaluate_batch(&[Candidate::Molecule { key, mol }], &Sequential);
        out.first().copied().ok_or(BudgetExhausted)
    }

    /// Score candidates in order. Stops at the first candidate that would need
    /// a fresh call after the budget is spent; the returned scores cover the
    /// processed prefix. Invalid candidates score 0 and are charged only when
    /// configured to be.
    pub fn evaluate_batch(&mut self, batch: &[Candidate<'_>], scorer: &dyn BatchScorer) -> Vec<f64> {
        enum Slot {
            Known(f64),
            Fresh(usize),
            NewInvalid,
        }
        let mut slots = Vec::with_capacity(batch.len());
        let mut fresh: Vec<(&str, &Molecule)> = Vec::new();
        let mut fresh_keys: BTreeMap<&str, usize> = BTreeMap::new();
        let mut invalid_keys: Vec<String> = Vec::new();
        let mut used = self.calls_used();
        for cand in batch {
            let (key, mol) = match *cand {
                Candidate::Molecule { key, mol } => (key, Some(mol)),
                Candidate::Invalid { text } if self.charge_invalid => (text, None),
                Candidate::Invalid { .. } => {
                    slots.push(Slot::Known(0.0));
                    continue;
                }
            };
            let cache_key = match mol {
                Some(_) => String::from(key),
                None => invalid_cache_key(key),
            };
            if let Some(&s) = self.cache.get(&cache_key) {
                slots.push(Slot::Known(s));
                continue;
            }
            if mol.is_some() {
                if let Some(&i) = fresh_keys.get(key) {
                    slots.push(Slot::Fresh(i));
                    continue;
                }
            } else if invalid_keys.contains(&cache_key) {
                slots.push(Slot::Known(0.0));
                continue;
            }
            if used >= self.budget {
                break;
            }
            used += 1;
            match mol {
                Some(m) => {
                    fresh_keys.insert(key, fresh.len());
                    slots.push(Slot::Fresh(fresh.len()));
                    fresh.push((key, m));
                }
                None => {
                    invalid_keys.push(cache_key);
                    slots.push(Slot::NewInvalid);
                }
            }
        }

        let mols: Vec<&Molecule> = fresh.iter().map(|&(_, m)| m).collect();
        let scores = scorer.score_all(self.inner.as_ref(), &mols);
        assert_eq!(scores.len(), mols.len(), "scorer returned the wrong number of scores");

        // Commit calls in sample order.
        let mut committed = alloc::vec![false; fresh.len()];
        let mut out = Vec::with_capacity(slots.len());
        for (slot, cand) in slots.iter().zip(batch) {
            match *slot {
                Slot::Fresh(i) => {
                    if !committed[i] {
                        committed[i] = true;
                        self.append(fresh[i].0.into(), scores[i], true);
                    }
                    out.push(scores[i]);
                }
                Slot::Known(s) => out.push(s),
                Slot::NewInvalid => {
                    if let Candidate::Invalid { text } = *cand {
                        self.append(text.into(), 0.0, false);
                    }
                    out.push(0.0);
                }
            }
        }
        out
    }

    fn append(&mut self, key: String, score: f64, valid: bool) {
        let call_index = self.calls_used() + 1;
        let cache_key = if valid { key.clone() } else { invalid_cache_key(&key) };
        self.cache.insert(cache_key, score);
        self.log.push(OracleRecord { call_index, key, score, valid });
    }
}

/// Invalid texts share the cache with canonical keys, so they are prefixed
/// with a character that never starts a SMILES string.
fn invalid_cache_key(text: &str) -> String {
    let mut k = String::from("\u{0}");
    k.push_str(text);
    k
}

//! AUC Top-10 metrics over an oracle log: plain, property-filtered, diverse
//! and combined.
//!
//! All four top-10 means divide by exactly ten, so pools with fewer than ten
//! qualifying molecules are zero-padded. Because the filtered and diverse
//! selections are subsequences of the ranked plain pool, each of their sums
//! is termwise no larger, and the orderings hold exactly in floating point.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::chem::parse_smiles;
use crate::fingerprint::{intersection_count, Fingerprint};
use crate::oracle::OracleRecord;
use crate::refstats::{filter_observation, FilterConfig, FilterVerdict, Observation, ReferenceStats, StatsError};

pub const TOP_K: usize = 10;
pub const DIVERSITY_THRESHOLD: f64 = 0.35;
pub const DEFAULT_RECORD_INTERVAL: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    pub record_interval: u64,
    pub threshold: f64,
    pub k: usize,
    pub filter: FilterConfig,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            record_interval: DEFAULT_RECORD_INTERVAL,
            threshold: DIVERSITY_THRESHOLD,
            k: TOP_K,
            filter: FilterConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetricError {
    BudgetMismatch { last_point: u64, budget: u64 },
    UnorderedPoints,
    Stats(StatsError),
}

impl fmt::Display for MetricError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricError::BudgetMismatch { last_point, budget } => {
                write!(f, "recording point {last_point} lies beyond the budget {budget}")
            }
            MetricError::UnorderedPoints => f.write_str("recording points must strictly increase"),
            MetricError::Stats(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for MetricError {}

impl From<StatsError> for MetricError {
    fn from(e: StatsError) -> Self {
        MetricError::Stats(e)
    }
}

/// A unique molecule from a run, with what the metrics need to rank, filter
/// and compare it.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredMol {
    pub key: String,
    pub score: f64,
    pub first_call: u64,
    /// `None` when the key could not be parsed; such entries never enter a
    /// diverse selection.
    pub fingerprint: Option<Fingerprint>,
    pub mw: Option<f64>,
    pub logp: Option<f64>,
    pub verdict: FilterVerdict,
}

/// Score descending, then earliest call.
pub fn rank_order(a: &ScoredMol, b: &ScoredMol) -> Ordering {
    b.score.total_cmp(&a.score).then(a.first_call.cmp(&b.first_call))
}

/// Sum of the `k` largest of `desc` (already sorted descending), added in
/// that order, divided by `k`.
pub fn padded_mean(desc: impl IntoIterator<Item = f64>, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let mut sum = 0.0;
    for s in desc.into_iter().take(k) {
        sum += s;
    }
    sum / k as f64
}

/// Mean of the ten highest scores, zero-padded to ten.
pub fn top10_mean(scores: &[f64]) -> f64 {
    let mut v = scores.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    padded_mean(v, TOP_K)
}

/// Tanimoto similarity of two fingerprints of equal width.
fn similarity(a: &Fingerprint, b: &Fingerprint) -> f64 {
    let both = intersection_count(a.on_bits(), b.on_bits());
    let union = a.count() + b.count() - both;
    if union == 0 {
        1.0
    } else {
        both as f64 / union as f64
    }
}

/// Greedy scan of `ranked`: keep an entry when its similarity to every kept
/// entry is at most `threshold`. Returns positions into `ranked`.
pub fn diverse_select(ranked: &[&ScoredMol], threshold: f64, k: usize) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    for (i, m) in ranked.iter().enumerate() {
        if chosen.len() >= k {
            break;
        }
        let Some(fp) = &m.fingerprint else { continue };
        let ok = chosen.iter().all(|&j| {
            let other = ranked[j].fingerprint.as_ref().expect("chosen entries have fingerprints");
            similarity(fp, other) <= threshold
        });
        if ok {
            chosen.push(i);
        }
    }
    chosen
}

/// Fixed-budget area under a piecewise-constant series. `points` holds
/// (call index, value) pairs; the value before the first point is 0 and the
/// last value is held through call `budget`.
pub fn auc_series(points: &[(u64, f64)], budget: u64) -> Result<f64, MetricError> {
    if points.windows(2).any(|w| w[0].0 >= w[1].0) || points.first().is_some_and(|p| p.0 == 0) {
        return Err(MetricError::UnorderedPoints);
    }
    if let Some(&(last, _)) = points.last() {
        if last > budget {
            return Err(MetricError::BudgetMismatch { last_point: last, budget });
        }
    }
    if budget == 0 {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    let mut current = 0.0;
    let mut next = 0;
    for t in 1..=budget {
        while next < points.len() && points[next].0 <= t {
            current = points[next].1;
            next += 1;
        }
        sum += current;
    }
    Ok(sum / budget as f64)
}

/// Multiples of `interval` up to the last call, plus the last call itself.
pub fn recording_points(last_call: u64, interval: u64) -> Vec<u64> {
    let interval = interval.max(1);
    let mut pts: Vec<u64> = (1..=last_call / interval).map(|i| i * interval).collect();
    if last_call > 0 && pts.last() != Some(&last_call) {
        pts.push(last_call);
    }
    pts
}

/// The four top-k means of one pool, plus the keys behind each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointValues {
    pub plain: f64,
    pub filtered: f64,
    pub diverse: f64,
    pub combined: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Selections {
    pub plain: Vec<String>,
    pub filtered: Vec<String>,
    pub diverse: Vec<String>,
    pub combined: Vec<String>,
}

/// Evaluate one pool of unique molecules.
pub fn evaluate_pool(pool: &[&ScoredMol], cfg: &MetricConfig) -> (PointValues, Selections) {
    let mut ranked: Vec<&ScoredMol> = pool.to_vec();
    ranked.sort_by(|a, b| rank_order(a, b));
    let filtered: Vec<&ScoredMol> = ranked.iter().copied().filter(|m| m.verdict.pass).collect();
    let diverse: Vec<&ScoredMol> =
        diverse_select(&ranked, cfg.threshold, cfg.k).into_iter().map(|i| ranked[i]).collect();
    let combined: Vec<&ScoredMol> =
        diverse_select(&filtered, cfg.threshold, cfg.k).into_iter().map(|i| filtered[i]).collect();
    let mean = |list: &[&ScoredMol]| padded_mean(list.iter().map(|m| m.score), cfg.k);
    let keys = |list: &[&ScoredMol]| list.iter().take(cfg.k).map(|m| m.key.clone()).collect();
    let values = PointValues {
        plain: mean(&ranked),
        filtered: mean(&filtered),
        diverse: mean(&diverse),
        combined: mean(&combined),
    };
    let sel = Selections { plain: keys(&ranked), filtered: keys(&filtered), diverse: keys(&diverse), combined: keys(&combined) };
    (values, sel)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub points: Vec<u64>,
    pub plain: Vec<f64>,
    pub filtered: Vec<f64>,
    pub diverse: Vec<f64>,
    pub combined: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub auc_plain: f64,
    pub auc_filtered: f64,
    pub auc_diverse: f64,
    pub auc_combined: f64,
    pub budget: u64,
    pub calls: u64,
    pub unique_molecules: usize,
    /// Valid records whose key failed to parse.
    pub unparsed: usize,
    pub series: Series,
    /// Selected keys for each metric at the final recording point.
    pub certificates: Selections,
}

/// Build the unique-molecule table of a log. The first record of each key
/// wins; invalid records are left out.
pub fn scored_molecules(log: &[OracleRecord], stats: &ReferenceStats, filter: FilterConfig) -> Result<Vec<ScoredMol>, MetricError> {
    let params = stats.params();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for r in log.iter().filter(|r| r.valid) {
        if !seen.insert(r.key.as_str()) {
            continue;
        }
        let mut m = ScoredMol {
            key: r.key.clone(),
            score: r.score,
            first_call: r.call_index,
            fingerprint: None,
            mw: None,
            logp: None,
            verdict: FilterVerdict { pass: false, reasons: Vec::new() },
        };
        if let Ok(mol) = parse_smiles(&r.key) {
            match Observation::of(&mol, params) {
                Ok(obs) => {
                    m.verdict = filter_observation(&obs, stats, filter)?;
                    m.mw = Some(obs.mw);
                    m.logp = Some(obs.logp);
                    m.fingerprint = Some(obs.fingerprint);
                }
                Err(_) => {
                    m.fingerprint = Some(crate::fingerprint::ecfp(&mol, params.radius, params.width));
                }
            }
        }
        out.push(m);
    }
    Ok(out)
}

/// Metrics from a table of unique molecules. `last_call` is the highest call
/// index of the run (invalid calls included).
pub fn compute_from_scored(scored: &[ScoredMol], last_call: u64, budget: u64, cfg: &MetricConfig) -> Result<MetricReport, MetricError> {
    let points = recording_points(last_call, cfg.record_interval);
    let mut by_call: Vec<&ScoredMol> = scored.iter().collect();
    by_call.sort_by_key(|m| m.first_call);
    let mut series = Series { points: points.clone(), plain: Vec::new(), filtered: Vec::new(), diverse: Vec::new(), combined: Vec::new() };
    let mut certificates = Selections::default();
    let mut upto = 0;
    for &p in &points {
        while upto < by_call.len() && by_call[upto].first_call <= p {
            upto += 1;
        }
        let (v, sel) = evaluate_pool(&by_call[..upto], cfg);
        series.plain.push(v.plain);
        series.filtered.push(v.filtered);
        series.diverse.push(v.diverse);
        series.combined.push(v.combined);
        certificates = sel;
    }
    let auc = |vals: &[f64]| {
        let pts: Vec<(u64, f64)> = points.iter().copied().zip(vals.iter().copied()).collect();
        auc_series(&pts, budget)
    };
    Ok(MetricReport {
        auc_plain: auc(&series.plain)?,
        auc_filtered: auc(&series.filtered)?,
        auc_diverse: auc(&series.diverse)?,
        auc_combined: auc(&series.combined)?,
        budget,
        calls: last_call,
        unique_molecules: scored.len(),
        unparsed: scored.iter().filter(|m| m.fingerprint.is_none()).count(),
        series,
        certificates,
    })
}

/// All four AUC Top-10 metrics of a run log against a fixed budget.
pub fn compute_all(log: &[OracleRecord], stats: &ReferenceStats, budget: u64, cfg: &MetricConfig) -> Result<MetricReport, MetricError> {
    let scored = scored_molecules(log, stats, cfg.filter)?;
    let last_call = log.iter().map(|r| r.call_index).max().unwrap_or(0);
    compute_from_scored(&scored, last_call, budget, cfg)
}

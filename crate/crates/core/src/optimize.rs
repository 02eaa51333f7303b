//! Budgeted optimization loops over a GRU policy: Augmented Hill-Climb,
//! REINVENT, plain hill-climb fine-tuning and random sampling.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chem::{canonical_key, parse_smiles, Molecule};
use crate::exec::{Executor, Serial};
use crate::metrics::top10_mean;
use crate::oracle::{BatchScorer, BudgetedOracle, Candidate, Objective, OracleRecord};
use crate::policy::{Adam, AdamConfig, GruLM, Sample, DEFAULT_MAX_LEN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OptimizerKind {
    #[serde(rename = "AHC")]
    Ahc,
    #[serde(rename = "REINVENT")]
    Reinvent,
    #[serde(rename = "HC")]
    Hc,
    #[serde(rename = "RANDOM")]
    Random,
}

impl OptimizerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OptimizerKind::Ahc => "AHC",
            OptimizerKind::Reinvent => "REINVENT",
            OptimizerKind::Hc => "HC",
            OptimizerKind::Random => "RANDOM",
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Label used in reports and output paths, e.g. `AHC*`.
    pub name: String,
    pub optimizer: OptimizerKind,
    pub sigma: f64,
    pub k_fraction: f64,
    pub batch_size: usize,
    pub budget: u64,
    pub patience: usize,
    pub improvement_eps: f64,
    pub seed: u64,
    pub objective: String,
    pub record_interval: u64,
    pub learning_rate: f64,
    /// Generated tokens allowed per sample, EOS included.
    pub max_len: usize,
    /// Hard cap on optimizer steps, a guard against runs that stop spending
    /// budget (for instance a policy that only re-samples cached molecules).
    pub max_steps: usize,
}

impl RunConfig {
    pub fn preset(kind: OptimizerKind) -> Self {
        let base = RunConfig {
            name: kind.as_str().to_string(),
            optimizer: kind,
            sigma: 120.0,
            k_fraction: 0.25,
            batch_size: 256,
            budget: 10_000,
            patience: 5,
            improvement_eps: 1e-3,
            seed: 0,
            objective: String::new(),
            record_interval: 100,
            learning_rate: 5e-4,
            max_len: DEFAULT_MAX_LEN,
            max_steps: 1000,
        };
        match kind {
            OptimizerKind::Ahc | OptimizerKind::Hc | OptimizerKind::Random => base,
            OptimizerKind::Reinvent => RunConfig { sigma: 500.0, k_fraction: 1.0, ..base },
        }
    }

    /// AHC with the gentler σ = 60.
    pub fn ahc_star() -> Self {
        RunConfig { name: "AHC*".to_string(), sigma: 60.0, ..Self::preset(OptimizerKind::Ahc) }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |field: &'static str, detail: &'static str| Err(ConfigError { field, detail });
        if !(self.k_fraction > 0.0 && self.k_fraction <= 1.0) {
            return bad("k_fraction", "must lie in (0, 1]");
        }
        if self.optimizer == OptimizerKind::Reinvent && self.k_fraction != 1.0 {
            return bad("k_fraction", "REINVENT trains on the whole batch; use AHC for k < 1");
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad("sigma", "must be finite and non-negative");
        }
        if self.batch_size == 0 {
            return bad("batch_size", "must be at least 1");
        }
        if self.record_interval == 0 {
            return bad("record_interval", "must be at least 1");
        }
        if !(self.improvement_eps >= 0.0 && self.improvement_eps.is_finite()) {
            return bad("improvement_eps", "must be finite and non-negative");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate", "must be finite and positive");
        }
        if self.max_len == 0 {
            return bad("max_len", "must be at least 1");
        }
        if self.name.is_empty() {
            return bad("name", "must not be empty");
        }
        Ok(())
    }

    /// Kept-set size for a batch of `n` scored samples.
    pub fn kept(&self, n: usize) -> usize {
        libm::ceil(self.k_fraction * n as f64) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub field: &'static str,
    pub detail: &'static str,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid run configuration: {} {}", self.field, self.detail)
    }
}

impl core::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Budget,
    Patience,
    Completed,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Budget => "budget",
            StopReason::Patience => "patience",
            StopReason::Completed => "completed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub log: Vec<OracleRecord>,
    pub stop_reason: StopReason,
    pub steps_taken: usize,
    pub final_model_digest: String,
    /// Loss of each step; `None` where no update happened.
    pub losses: Vec<Option<f64>>,
    pub calls_used: u64,
}

/// What one step did.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub loss: Option<f64>,
    /// Samples that received a score; fewer than the batch when the budget
    /// ran out mid-batch.
    pub scored: usize,
    pub kept: Vec<usize>,
    pub budget_hit: bool,
}

/// Everything a step needs besides the models.
pub struct StepContext<'a, E: Executor> {
    pub exec: &'a E,
    pub rng: &'a mut ChaCha8Rng,
}

/// Adapts an [`Executor`] into the oracle's scoring hook.
pub struct ExecScorer<'a, E: Executor>(pub &'a E);

impl<E: Executor> BatchScorer for ExecScorer<'_, E> {
    fn score_all(&self, objective: &dyn Objective, mols: &[&Molecule]) -> Vec<f64> {
        self.0.map(mols.len(), |i| objective.score(mols[i]))
    }
}

enum Decoded {
    Valid { key: String, mol: Molecule },
    Invalid(String),
}

fn decode_all<E: Executor>(exec: &E, agent: &GruLM, samples: &[Sample]) -> Vec<Decoded> {
    exec.map(samples.len(), |i| {
        let s = &samples[i];
        let text = agent.vocab().decode(&s.tokens);
        if !s.complete {
            return Decoded::Invalid(text);
        }
        match parse_smiles(&text) {
            Ok(mol) if mol.atom_count() > 0 => Decoded::Valid { key: canonical_key(&mol), mol },
            _ => Decoded::Invalid(text),
        }
    })
}

/// Sample a batch, score it through the oracle in sample order, and return
/// the samples, their scores (prefix that fit the budget) and validity.
fn sample_and_score<E: Executor>(
    agent: &GruLM,
    oracle: &mut BudgetedOracle,
    cfg: &RunConfig,
    ctx: &mut StepContext<'_, E>,
) -> (Vec<Sample>, Vec<f64>, Vec<bool>) {
    let samples = agent.sample_batch(cfg.batch_size, &mut *ctx.rng, cfg.max_len);
    let decoded = decode_all(ctx.exec, agent, &samples);
    let cands: Vec<Candidate<'_>> = decoded
        .iter()
        .map(|d| match d {
            Decoded::Valid { key, mol } => Candidate::Molecule { key, mol },
            Decoded::Invalid(text) => Candidate::Invalid { text },
        })
        .collect();
    let scores = oracle.evaluate_batch(&cands, &ExecScorer(ctx.exec));
    let valid = decoded.iter().map(|d| matches!(d, Decoded::Valid { .. })).collect();
    (samples, scores, valid)
}

/// Indices of the top `kept` scores; ties keep sample order.
fn top_indices(scores: &[f64], kept: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order.truncate(kept);
    order
}

/// One Augmented Hill-Climb step: the agent moves toward the augmented
/// likelihood `log P_prior + σ·score` on the top-scoring fraction of its
/// own batch.
pub fn ahc_step<E: Executor>(
    agent: &mut GruLM,
    prior: &GruLM,
    opt: &mut Adam,
    oracle: &mut BudgetedOracle,
    cfg: &RunConfig,
    ctx: &mut StepContext<'_, E>,
) -> StepOutcome {
    let (samples, scores, _) = sample_and_score(agent, oracle, cfg, ctx);
    let budget_hit = scores.len() < samples.len() || oracle.exhausted();
    let kept = top_indices(&scores, cfg.kept(scores.len()));
    if kept.is_empty() {
        return StepOutcome { loss: None, scored: scores.len(), kept, budget_hit };
    }
    let seqs: Vec<&[u32]> = kept.iter().map(|&i| samples[i].tokens.as_slice()).collect();
    let prior_nll = prior.nll_batch_with(ctx.exec, &seqs);
    let targets: Vec<f64> = kept.iter().zip(&prior_nll).map(|(&i, &pn)| -pn + cfg.sigma * scores[i]).collect();
    let k = seqs.len() as f64;
    let (nll, grads) = agent.nll_and_grad_with(ctx.exec, &seqs, |b, n| 2.0 * (targets[b] + n) / k);
    let mut loss = 0.0;
    for (t, n) in targets.iter().zip(&nll) {
        loss += (t + n) * (t + n);
    }
    opt.update(agent.params_mut(), &grads);
    StepOutcome { loss: Some(loss / k), scored: scores.len(), kept, budget_hit }
}

/// One plain hill-climb step: maximum likelihood on the top-scoring
/// fraction of the batch. No update when the batch held no valid molecule.
pub fn hc_step<E: Executor>(
    agent: &mut GruLM,
    opt: &mut Adam,
    oracle: &mut BudgetedOracle,
    cfg: &RunConfig,
    ctx: &mut StepContext<'_, E>,
) -> StepOutcome {
    let (samples, scores, valid) = sample_and_score(agent, oracle, cfg, ctx);
    let budget_hit = scores.len() < samples.len() || oracle.exhausted();
    let kept = top_indices(&scores, cfg.kept(scores.len()));
    if !valid[..scores.len()].iter().any(|&v| v) {
        return StepOutcome { loss: None, scored: scores.len(), kept: Vec::new(), budget_hit };
    }
    let seqs: Vec<&[u32]> = kept.iter().map(|&i| samples[i].tokens.as_slice()).collect();
    let k = seqs.len() as f64;
    let (nll, grads) = agent.nll_and_grad_with(ctx.exec, &seqs, |_, _| 1.0 / k);
    opt.update(agent.params_mut(), &grads);
    StepOutcome { loss: Some(nll.iter().sum::<f64>() / k), scored: scores.len(), kept, budget_hit }
}

/// Sampling from the unchanged prior.
pub fn random_step<E: Executor>(
    agent: &GruLM,
    oracle: &mut BudgetedOracle,
    cfg: &RunConfig,
    ctx: &mut StepContext<'_, E>,
) -> StepOutcome {
    let (samples, scores, _) = sample_and_score(agent, oracle, cfg, ctx);
    let budget_hit = scores.len() < samples.len() || oracle.exhausted();
    StepOutcome { loss: None, scored: scores.len(), kept: Vec::new(), budget_hit }
}

/// Early stopping on the plain top-10 mean, checked at every multiple of
/// `interval` calls.
#[derive(Debug, Clone)]
pub struct Patience {
    interval: u64,
    patience: usize,
    eps: f64,
    next_boundary: u64,
    best: Option<f64>,
    stale: usize,
}

impl Patience {
    pub fn new(interval: u64, patience: usize, eps: f64) -> Self {
        Patience { interval, patience, eps, next_boundary: interval, best: None, stale: 0 }
    }

    /// Feed the log after a step; returns true once patience has run out.
    pub fn observe(&mut self, log: &[OracleRecord]) -> bool {
        let calls = log.len() as u64;
        while self.next_boundary <= calls {
            let b = self.next_boundary;
            self.next_boundary += self.interval;
            let scores: Vec<f64> = log[..b as usize].iter().filter(|r| r.valid).map(|r| r.score).collect();
            let v = top10_mean(&scores);
            match self.best {
                None => self.best = Some(v),
                Some(best) if v > best + self.eps => {
                    self.best = Some(v);
                    self.stale = 0;
                }
                Some(_) => {
                    self.stale += 1;
                    if self.stale >= self.patience {
                        return true;
                    }
                }
            }
        }
        false
    }
}

/// Run one optimizer from `prior` until the budget is spent, patience runs
/// out or `max_steps` is reached.
pub fn run_optimization(
    cfg: &RunConfig,
    prior: &GruLM,
    objective: Box<dyn Objective>,
    charge_invalid: bool,
) -> Result<RunResult, ConfigError> {
    run_optimization_with(&Serial, cfg, prior, objective, charge_invalid)
}

pub fn run_optimization_with<E: Executor>(
    exec: &E,
    cfg: &RunConfig,
    prior: &GruLM,
    objective: Box<dyn Objective>,
    charge_invalid: bool,
) -> Result<RunResult, ConfigError> {
    cfg.validate()?;
    let mut oracle = BudgetedOracle::new(objective, cfg.budget).charging_invalid(charge_invalid);
    let mut agent = prior.clone();
    let mut opt = Adam::new(AdamConfig::with_lr(cfg.learning_rate), agent.params());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut patience = Patience::new(cfg.record_interval, cfg.patience, cfg.improvement_eps);
    let mut losses = Vec::new();
    let mut stop = StopReason::Completed;
    let mut steps = 0;
    while steps < cfg.max_steps {
        if oracle.exhausted() {
            stop = StopReason::Budget;
            break;
        }
        let mut ctx = StepContext { exec, rng: &mut rng };
        let out = match cfg.optimizer {
            OptimizerKind::Ahc | OptimizerKind::Reinvent => ahc_step(&mut agent, prior, &mut opt, &mut oracle, cfg, &mut ctx),
            OptimizerKind::Hc => hc_step(&mut agent, &mut opt, &mut oracle, cfg, &mut ctx),
            OptimizerKind::Random => random_step(&agent, &mut oracle, cfg, &mut ctx),
        };
        steps += 1;
        losses.push(out.loss);
        let patience_out = patience.observe(oracle.log());
        if out.budget_hit {
            stop = StopReason::Budget;
            break;
        }
        if patience_out {
            stop = StopReason::Patience;
            break;
        }
    }
    let calls_used = oracle.calls_used();
    Ok(RunResult {
        log: oracle.into_log(),
        stop_reason: stop,
        steps_taken: steps,
        final_model_digest: agent.digest(),
        losses,
        calls_used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn record(i: u64, score: f64) -> OracleRecord {
        OracleRecord { call_index: i, key: alloc::format!("C{i}"), score, valid: true }
    }

    #[test]
    fn presets_validate() {
        for k in [OptimizerKind::Ahc, OptimizerKind::Reinvent, OptimizerKind::Hc, OptimizerKind::Random] {
            RunConfig::preset(k).validate().unwrap();
        }
        RunConfig::ahc_star().validate().unwrap();
        assert_eq!(RunConfig::preset(OptimizerKind::Reinvent).sigma, 500.0);
        let mut c = RunConfig::preset(OptimizerKind::Ahc);
        c.k_fraction = 0.0;
        assert_eq!(c.validate().unwrap_err().field, "k_fraction");
        let mut c = RunConfig::preset(OptimizerKind::Reinvent);
        c.k_fraction = 0.5;
        assert!(c.validate().is_err());
        let mut c = RunConfig::preset(OptimizerKind::Hc);
        c.sigma = -1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn kept_rounds_up() {
        let c = RunConfig::preset(OptimizerKind::Ahc);
        assert_eq!(c.kept(256), 64);
        assert_eq!(c.kept(10), 3);
        assert_eq!(c.kept(1), 1);
        assert_eq!(c.kept(0), 0);
    }

    #[test]
    fn ties_keep_sample_order() {
        assert_eq!(top_indices(&[0.5; 6], 3), vec![0, 1, 2]);
        assert_eq!(top_indices(&[0.1, 0.9, 0.5, 0.9], 3), vec![1, 3, 2]);
    }

    #[test]
    fn patience_counts_boundaries_after_the_first() {
        let log: Vec<OracleRecord> = (1..=1000).map(|i| record(i, 0.0)).collect();
        let mut p = Patience::new(100, 5, 1e-3);
        assert!(!p.observe(&log[..500]));
        assert!(p.observe(&log[..600]));

        let mut p = Patience::new(100, 2, 1e-3);
        let rising: Vec<OracleRecord> = (1..=400).map(|i| record(i, i as f64 / 400.0)).collect();
        assert!(!p.observe(&rising));
    }

    #[test]
    fn config_json_rejects_unknown_keys() {
        let c = RunConfig::preset(OptimizerKind::Ahc);
        let text = serde_json::to_string(&c).unwrap();
        assert!(text.contains("\"optimizer\":\"AHC\""));
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), c);
        let extra = text.replacen('{', "{\"temperature\":1.0,", 1);
        assert!(serde_json::from_str::<RunConfig>(&extra).is_err());
    }
}

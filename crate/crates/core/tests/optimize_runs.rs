use molbench_core::chem::{canonical_key, parse_smiles, Molecule};
use molbench_core::exec::Serial;
use molbench_core::optimize::{ahc_step, hc_step, run_optimization, OptimizerKind, RunConfig, StepContext, StopReason};
use molbench_core::oracle::{similarity_objective, BudgetedOracle, Objective};
use molbench_core::policy::{encode_corpus_default, pretrain, Adam, AdamConfig, GruLM, Hyper, PretrainConfig, Vocabulary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

/// Short acyclic chains with an occasional methyl branch; a tiny model
/// learns these well enough to sample mostly valid, mostly distinct strings.
fn chain_corpus(n: usize) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    (0..n)
        .map(|_| {
            let len = rng.random_range(3..12);
            let mut s = String::from("C");
            for _ in 1..len {
                s.push_str(["C", "C", "C", "N", "O", "C(C)"][rng.random_range(0..6)]);
            }
            s
        })
        .collect()
}

fn prior() -> &'static GruLM {
    static PRIOR: OnceLock<GruLM> = OnceLock::new();
    PRIOR.get_or_init(|| {
        let lines = chain_corpus(600);
        let vocab = Vocabulary::from_corpus(lines.iter().map(String::as_str)).unwrap();
        let corpus = encode_corpus_default(&vocab, lines.iter().map(String::as_str)).unwrap();
        let mut m = GruLM::new(vocab, Hyper { embed: 8, hidden: 24, layers: 1 }, 3).unwrap();
        let cfg = PretrainConfig { epochs: 4, batch_size: 16, lr: 1e-2, seed: 1 };
        pretrain(&mut m, &corpus.sequences, &cfg);
        m
    })
}

#[test]
fn prior_samples_mostly_valid_chains() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let samples = prior().sample_batch(200, &mut rng, 60);
    let valid = samples
        .iter()
        .filter(|s| s.complete && parse_smiles(&prior().vocab().decode(&s.tokens)).is_ok())
        .count();
    assert!(valid > 150, "{valid}");
}

struct Zero;

impl Objective for Zero {
    fn name(&self) -> &str {
        "zero"
    }
    fn score(&self, _: &Molecule) -> f64 {
        0.0
    }
}

fn similarity() -> Box<dyn Objective> {
    Box::new(similarity_objective("CCOCC(C)CNCCO").unwrap())
}

fn small(kind: OptimizerKind) -> RunConfig {
    RunConfig { batch_size: 32, budget: 150, max_len: 60, seed: 9, ..RunConfig::preset(kind) }
}

#[test]
fn random_baseline_never_updates() {
    let r = run_optimization(&small(OptimizerKind::Random), prior(), similarity(), false).unwrap();
    assert_eq!(r.final_model_digest, prior().digest());
    assert!(r.losses.iter().all(Option::is_none));
    assert_eq!(r.stop_reason, StopReason::Budget);
    assert_eq!(r.log.len(), 150);
}

#[test]
fn budget_dominates_a_large_batch() {
    let cfg = RunConfig { budget: 50, batch_size: 256, ..small(OptimizerKind::Ahc) };
    let r = run_optimization(&cfg, prior(), similarity(), false).unwrap();
    assert_eq!(r.steps_taken, 1);
    assert!(r.log.len() <= 50);
    assert_eq!(r.stop_reason, StopReason::Budget);
    for (i, rec) in r.log.iter().enumerate() {
        assert_eq!(rec.call_index, i as u64 + 1);
    }
}

#[test]
fn zero_objective_exhausts_patience() {
    let cfg = RunConfig { budget: 5000, record_interval: 20, patience: 3, ..small(OptimizerKind::Ahc) };
    let r = run_optimization(&cfg, prior(), Box::new(Zero), false).unwrap();
    assert_eq!(r.stop_reason, StopReason::Patience);
    // Baseline at call 20, then three stale boundaries: 40, 60, 80.
    assert!(r.calls_used >= 80);
    assert!(r.calls_used < 80 + cfg.batch_size as u64);
}

#[test]
fn k_one_ahc_is_reinvent() {
    let reinvent = RunConfig { sigma: 120.0, ..small(OptimizerKind::Reinvent) };
    let ahc = RunConfig { optimizer: OptimizerKind::Ahc, k_fraction: 1.0, name: "AHC".into(), ..reinvent.clone() };
    let a = run_optimization(&ahc, prior(), similarity(), false).unwrap();
    let b = run_optimization(&reinvent, prior(), similarity(), false).unwrap();
    assert_eq!(a, b);
    assert!(a.losses.iter().all(Option::is_some));
}

#[test]
fn runs_are_reproducible() {
    for kind in [OptimizerKind::Ahc, OptimizerKind::Hc, OptimizerKind::Random] {
        let a = run_optimization(&small(kind), prior(), similarity(), false).unwrap();
        let b = run_optimization(&small(kind), prior(), similarity(), false).unwrap();
        assert_eq!(a, b, "{kind}");
        let keys: std::collections::BTreeSet<_> = a.log.iter().map(|r| &r.key).collect();
        assert_eq!(keys.len(), a.log.len());
    }
}

#[test]
fn charged_invalid_samples_enter_the_log() {
    let cfg = small(OptimizerKind::Random);
    let r = run_optimization(&cfg, prior(), similarity(), true).unwrap();
    assert_eq!(r.log.len(), 150);
    let free = run_optimization(&cfg, prior(), similarity(), false).unwrap();
    assert!(free.log.iter().all(|x| x.valid));
    if r.log.iter().any(|x| !x.valid) {
        assert_ne!(r.log, free.log);
    }
}

#[test]
fn invalid_config_fails_before_any_call() {
    let cfg = RunConfig { batch_size: 0, ..small(OptimizerKind::Ahc) };
    assert_eq!(run_optimization(&cfg, prior(), similarity(), false).unwrap_err().field, "batch_size");
}

/// Recompute a step's loss with the updated agent on the very batch it was
/// trained on.
fn descent_check(kind: OptimizerKind) {
    let cfg = RunConfig { learning_rate: 1e-4, k_fraction: 0.5, ..small(kind) };
    let p = prior();
    let mut agent = p.clone();
    let mut opt = Adam::new(AdamConfig::with_lr(cfg.learning_rate), agent.params());
    let mut oracle = BudgetedOracle::new(similarity(), 10_000);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let batch = p.sample_batch(cfg.batch_size, &mut rng.clone(), cfg.max_len);
    let mut ctx = StepContext { exec: &Serial, rng: &mut rng };
    let out = match kind {
        OptimizerKind::Hc => hc_step(&mut agent, &mut opt, &mut oracle, &cfg, &mut ctx),
        _ => ahc_step(&mut agent, p, &mut opt, &mut oracle, &cfg, &mut ctx),
    };
    let before = out.loss.expect("an update happened");
    let seqs: Vec<&[u32]> = out.kept.iter().map(|&i| batch[i].tokens.as_slice()).collect();
    let after_nll = agent.nll_batch(&seqs);
    let k = seqs.len() as f64;
    let after = match kind {
        OptimizerKind::Hc => after_nll.iter().sum::<f64>() / k,
        _ => {
            let prior_nll = p.nll_batch(&seqs);
            let mut loss = 0.0;
            for ((&i, pn), an) in out.kept.iter().zip(&prior_nll).zip(&after_nll) {
                let text = p.vocab().decode(&batch[i].tokens);
                let score = parse_smiles(&text)
                    .ok()
                    .filter(|_| batch[i].complete)
                    .and_then(|m| oracle.cached(&canonical_key(&m)))
                    .unwrap_or(0.0);
                let d = -pn + cfg.sigma * score + an;
                loss += d * d;
            }
            loss / k
        }
    };
    assert!(after < before, "{kind}: {after} !< {before}");
}

#[test]
fn ahc_step_descends() {
    descent_check(OptimizerKind::Ahc);
}

#[test]
fn hc_step_descends() {
    descent_check(OptimizerKind::Hc);
}

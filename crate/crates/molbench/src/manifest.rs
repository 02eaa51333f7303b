//! Experiment manifests: what to run, against which corpus, stats and prior.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use molbench_core::metrics::MetricConfig;
use molbench_core::optimize::RunConfig;
use molbench_core::oracle::CompositeObjective;
use molbench_core::policy::GruLM;
use molbench_core::refstats::ReferenceStats;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};
use crate::formats::{read_checkpoint, read_objective, read_stats, run_config_from_json};
use crate::io::{path_label, read_json, resolve, sha256_file};

fn five() -> u32 {
    5
}

/// The manifest as written. Relative paths are relative to the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestFile {
    pub corpus: PathBuf,
    /// Expected SHA-256 of the corpus file; checked when present.
    #[serde(default)]
    pub corpus_digest: Option<String>,
    pub stats: PathBuf,
    pub prior: PathBuf,
    /// Expected prior parameter digest; checked when present.
    #[serde(default)]
    pub prior_digest: Option<String>,
    pub tasks: Vec<PathBuf>,
    /// Run configurations; each needs `optimizer` and may override any
    /// other field of that optimizer's preset.
    pub optimizers: Vec<Value>,
    #[serde(default = "five")]
    pub replicates: u32,
    #[serde(default)]
    pub master_seed: u64,
    /// Diversity threshold, top-k and filter settings for the reports.
    #[serde(default)]
    pub metrics: Option<MetricConfig>,
    #[serde(default)]
    pub charge_invalid: bool,
}

pub struct Task {
    pub name: String,
    pub label: String,
    pub objective: CompositeObjective,
}

pub struct Optimizer {
    pub label: String,
    pub config: RunConfig,
}

/// A manifest whose inputs have all been loaded and cross-checked.
pub struct Experiment {
    pub corpus_digest: String,
    pub stats: ReferenceStats,
    pub prior: GruLM,
    pub tasks: Vec<Task>,
    pub optimizers: Vec<Optimizer>,
    pub replicates: u32,
    pub master_seed: u64,
    pub metrics: MetricConfig,
    pub charge_invalid: bool,
}

/// Seed of replicate `rep`: the first eight bytes (little-endian) of
/// SHA-256 over `"molbench/replicate"`, the master seed and `rep`, both as
/// little-endian u64. Independent of task and optimizer, so every
/// optimizer sees the same seeds.
pub fn replicate_seed(master: u64, rep: u32) -> u64 {
    let mut h = Sha256::new();
    h.update(b"molbench/replicate");
    h.update(master.to_le_bytes());
    h.update(u64::from(rep).to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().unwrap())
}

impl Experiment {
    /// Load everything a manifest names, verifying digests before anything
    /// runs. The `charge_invalid` flag is or-ed with the manifest's.
    pub fn load(manifest: &Path, charge_invalid: bool) -> Result<Self> {
        let file: ManifestFile = read_json(manifest)?;
        let base = manifest.parent().unwrap_or(Path::new("."));
        Self::from_file(file, base, charge_invalid)
    }

    pub fn from_file(file: ManifestFile, base: &Path, charge_invalid: bool) -> Result<Self> {
        if file.replicates == 0 {
            return Err(HarnessError::validation("manifest: replicates must be at least 1"));
        }
        if file.tasks.is_empty() || file.optimizers.is_empty() {
            return Err(HarnessError::validation("manifest: needs at least one task and one optimizer"));
        }
        let corpus_path = resolve(base, &file.corpus);
        let corpus_digest = sha256_file(&corpus_path)?;
        if let Some(expected) = &file.corpus_digest {
            if !expected.eq_ignore_ascii_case(&corpus_digest) {
                return Err(HarnessError::validation(format!(
                    "corpus {} has digest {corpus_digest}, manifest expects {expected}",
                    corpus_path.display()
                )));
            }
        }
        let stats_path = resolve(base, &file.stats);
        let stats = read_stats(&stats_path)?;
        if stats.source_digest != corpus_digest {
            return Err(HarnessError::validation(format!(
                "stats {} were built from corpus digest {}, not {corpus_digest}",
                stats_path.display(),
                stats.source_digest
            )));
        }
        let prior_path = resolve(base, &file.prior);
        let (prior, provenance) = read_checkpoint(&prior_path)?;
        if let Some(expected) = &file.prior_digest {
            if *expected != prior.digest() {
                return Err(HarnessError::validation(format!(
                    "prior {} has digest {}, manifest expects {expected}",
                    prior_path.display(),
                    prior.digest()
                )));
            }
        }
        if let Some(p) = provenance.filter(|p| p.corpus_digest != corpus_digest) {
            log::warn!("prior was pretrained on corpus {}, not the manifest corpus", p.corpus_digest);
        }

        let mut tasks = Vec::new();
        let mut seen = BTreeSet::new();
        for t in &file.tasks {
            let path = resolve(base, t);
            let (spec, objective) = read_objective(&path)?;
            let label = path_label(&spec.name);
            if !seen.insert(label.clone()) {
                return Err(HarnessError::validation(format!("task name {:?} is used twice", spec.name)));
            }
            tasks.push(Task { name: spec.name, label, objective });
        }

        let mut optimizers = Vec::new();
        let mut seen = BTreeSet::new();
        for (i, v) in file.optimizers.iter().enumerate() {
            let config = run_config_from_json(v).map_err(|e| HarnessError::validation(format!("optimizers[{i}]: {e}")))?;
            let label = path_label(&config.name);
            if !seen.insert(label.clone()) {
                return Err(HarnessError::validation(format!("optimizer name {:?} is used twice", config.name)));
            }
            optimizers.push(Optimizer { label, config });
        }

        let metrics = file.metrics.unwrap_or_default();
        if !(metrics.threshold.is_finite() && metrics.k > 0) {
            return Err(HarnessError::validation("manifest: metrics need a finite threshold and k >= 1"));
        }
        Ok(Experiment {
            corpus_digest,
            stats,
            prior,
            tasks,
            optimizers,
            replicates: file.replicates,
            master_seed: file.master_seed,
            metrics,
            charge_invalid: charge_invalid || file.charge_invalid,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replicate_seeds_are_stable_and_distinct() {
        let s: BTreeSet<u64> = (0..100).map(|r| replicate_seed(7, r)).collect();
        assert_eq!(s.len(), 100);
        assert_eq!(replicate_seed(7, 3), replicate_seed(7, 3));
        assert_ne!(replicate_seed(7, 3), replicate_seed(8, 3));
    }
}

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use molbench::commands::{cmd_pretrain, cmd_stats, PretrainJob};
use molbench_core::policy::{Hyper, PretrainConfig};
use molbench_core::refstats::FingerprintParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tempfile::TempDir;

pub const TINY: Hyper = Hyper { embed: 8, hidden: 24, layers: 1 };
pub const TARGET: &str = "CCOCC(C)CNCCO";

/// Short acyclic C/N/O chains the tiny prior learns in a few epochs.
pub fn chain_corpus(n: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
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

/// Corpus, stats, prior and one similarity task, built once per test
/// binary in a shared directory.
pub struct Fixture {
    _dir: TempDir,
    pub root: PathBuf,
}

impl Fixture {
    pub fn corpus(&self) -> PathBuf {
        self.root.join("corpus.smi")
    }
    pub fn stats(&self) -> PathBuf {
        self.root.join("stats.json")
    }
    pub fn prior(&self) -> PathBuf {
        self.root.join("prior.mbck")
    }
    pub fn task(&self) -> PathBuf {
        self.root.join("task.json")
    }

    pub fn manifest(&self, optimizers: Value, replicates: u32, master_seed: u64) -> Value {
        json!({
            "corpus": self.corpus(),
            "stats": self.stats(),
            "prior": self.prior(),
            "tasks": [self.task()],
            "optimizers": optimizers,
            "replicates": replicates,
            "master_seed": master_seed,
        })
    }
}

pub fn small(kind: &str, budget: u64) -> Value {
    json!({ "optimizer": kind, "batch_size": 32, "budget": budget, "max_len": 60, "record_interval": 50 })
}

pub fn write_json(path: &Path, v: &Value) -> PathBuf {
    std::fs::write(path, serde_json::to_string_pretty(v).unwrap()).unwrap();
    path.to_path_buf()
}

pub fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        let f = Fixture { _dir: dir, root };
        std::fs::write(f.corpus(), chain_corpus(600, 12).join("\n") + "\n").unwrap();
        cmd_stats(&f.corpus(), &f.stats(), FingerprintParams::default()).unwrap();
        let job = PretrainJob {
            corpus: f.corpus(),
            hyper: TINY,
            config: PretrainConfig { epochs: 4, batch_size: 16, lr: 1e-2, seed: 1 },
            init_seed: 3,
            out: f.prior(),
            epochs_csv: None,
        };
        cmd_pretrain(&job).unwrap();
        let task = json!({
            "name": "chain_similarity",
            "components": [{ "source": format!("similarity:{TARGET}"), "modifier": { "kind": "identity" } }]
        });
        write_json(&f.task(), &task);
        f
    })
}

pub fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

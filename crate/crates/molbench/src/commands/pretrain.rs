use std::path::{Path, PathBuf};

use molbench_core::policy::{encode_corpus, pretrain_with, EpochStats, GruLM, Hyper, PretrainConfig, Vocabulary, DEFAULT_MAX_LEN};

use crate::corpus::Corpus;
use crate::error::{HarnessError, Result};
use crate::formats::{write_checkpoint, Provenance};
use crate::io::write_file;
use crate::parallel::Rayon;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Profile {
    /// E=48, H=128, one GRU layer.
    Desk,
    /// E=128, H=512, three GRU layers.
    Full,
}

impl Profile {
    pub fn hyper(self) -> Hyper {
        match self {
            Profile::Desk => Hyper::DESK,
            Profile::Full => Hyper::FULL,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PretrainJob {
    pub corpus: PathBuf,
    pub hyper: Hyper,
    pub config: PretrainConfig,
    /// Seed for the initial weights.
    pub init_seed: u64,
    pub out: PathBuf,
    /// Per-epoch CSV; defaults to `<out>.epochs.csv`.
    pub epochs_csv: Option<PathBuf>,
}

pub struct PretrainOutcome {
    pub model: GruLM,
    pub epochs: Vec<EpochStats>,
    pub skipped_unparseable: u64,
    pub skipped_too_long: usize,
}

/// Records that parse as molecules and fit the length cap, in file order.
fn training_lines(corpus: &Corpus) -> (Vec<&str>, u64) {
    let mut lines = Vec::with_capacity(corpus.len());
    let mut failed = 0;
    for (s, r) in corpus.smiles.iter().zip(corpus.parse()) {
        match r {
            Ok(_) => lines.push(s.as_str()),
            Err(e) => {
                log::warn!("{}: {s} skipped: {e}", corpus.path.display());
                failed += 1;
            }
        }
    }
    (lines, failed)
}

pub fn cmd_pretrain(job: &PretrainJob) -> Result<PretrainOutcome> {
    let corpus = Corpus::load(&job.corpus)?;
    let (lines, failed) = training_lines(&corpus);
    if lines.is_empty() {
        return Err(HarnessError::validation(format!("{}: no usable SMILES", corpus.path.display())));
    }
    let vocab = Vocabulary::from_corpus(lines.iter().copied()).map_err(|e| HarnessError::validation(e.to_string()))?;
    let encoded = encode_corpus(&vocab, lines.iter().copied(), DEFAULT_MAX_LEN)
        .map_err(|e| HarnessError::validation(e.to_string()))?;
    if encoded.too_long > 0 {
        log::info!("{} records longer than {DEFAULT_MAX_LEN} tokens skipped", encoded.too_long);
    }
    let mut model = GruLM::new(vocab, job.hyper, job.init_seed).map_err(|e| HarnessError::validation(e.to_string()))?;
    log::info!(
        "pretraining on {} sequences, vocabulary {}, {} epochs",
        encoded.sequences.len(),
        model.vocab().len(),
        job.config.epochs
    );
    let epochs = pretrain_with(&Rayon, &mut model, &encoded.sequences, &job.config, |s| {
        log::info!("epoch {}: mean NLL {:.4} ({:.4} per token)", s.epoch, s.mean_nll, s.mean_token_nll);
    });
    let provenance = Provenance { corpus_digest: corpus.digest.clone(), pretrain: job.config, init_seed: job.init_seed };
    write_checkpoint(&job.out, &model, Some(provenance))?;
    let csv_path = job.epochs_csv.clone().unwrap_or_else(|| {
        let mut p = job.out.clone().into_os_string();
        p.push(".epochs.csv");
        PathBuf::from(p)
    });
    write_epochs_csv(&csv_path, &epochs)?;
    Ok(PretrainOutcome { model, epochs, skipped_unparseable: failed, skipped_too_long: encoded.too_long })
}

fn write_epochs_csv(path: &Path, epochs: &[EpochStats]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for e in epochs {
        w.serialize(e).map_err(|e| HarnessError::format(path, e))?;
    }
    if epochs.is_empty() {
        w.write_record(["epoch", "mean_nll", "mean_token_nll", "sequences", "tokens"])
            .map_err(|e| HarnessError::format(path, e))?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::format(path, e))?;
    write_file(path, &bytes)
}

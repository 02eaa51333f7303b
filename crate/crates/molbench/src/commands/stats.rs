use std::path::Path;

use molbench_core::refstats::{build_stats, FingerprintParams, ReferenceStats};

use crate::corpus::Corpus;
use crate::error::{HarnessError, Result};
use crate::formats::write_stats;

/// Reference statistics of a corpus file, written as JSON.
pub fn cmd_stats(corpus: &Path, out: &Path, params: FingerprintParams) -> Result<ReferenceStats> {
    let corpus = Corpus::load(corpus)?;
    let (molecules, failed) = corpus.molecules();
    let stats = build_stats(&molecules, params, failed, corpus.digest.clone())
        .map_err(|e| HarnessError::validation(format!("{}: {e}", corpus.path.display())))?;
    write_stats(out, &stats)?;
    Ok(stats)
}

pub fn summary(stats: &ReferenceStats) -> String {
    format!(
        "molecules {} (skipped {})\nMW   {:.3} ± {:.3}\nLogP {:.4} ± {:.4}\nECFP r={} w={}: {} bits seen\ndigest {}",
        stats.n_molecules,
        stats.skipped,
        stats.mw_mean,
        stats.mw_std,
        stats.logp_mean,
        stats.logp_std,
        stats.fp_radius,
        stats.fp_width,
        stats.bit_universe.len(),
        stats.source_digest
    )
}

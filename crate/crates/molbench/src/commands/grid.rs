use std::path::Path;

use molbench_core::optimize::{OptimizerKind, RunConfig};
use serde::Serialize;

use crate::error::{HarnessError, Result};
use crate::io::{path_label, write_file};
use crate::manifest::{Experiment, Optimizer};

use super::run::{run_experiment, SummaryRow};

pub const GRID_FILE: &str = "grid.csv";
pub const DEFAULT_SIGMAS: [f64; 4] = [60.0, 120.0, 240.0, 500.0];
pub const DEFAULT_KS: [f64; 3] = [0.25, 0.5, 1.0];

/// Mean AUCs of one (task, σ, K) cell over its successful replicates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridRow {
    pub task: String,
    pub sigma: f64,
    pub k: f64,
    pub optimizer: String,
    pub replicates: usize,
    pub failed: usize,
    pub auc_plain: Option<f64>,
    pub auc_filtered: Option<f64>,
    pub auc_diverse: Option<f64>,
    pub auc_combined: Option<f64>,
}

pub fn cell_name(sigma: f64, k: f64) -> String {
    format!("AHC_s{sigma}_k{k}")
}

/// The configuration every cell starts from: the manifest's first AHC
/// entry, or the AHC preset with the first entry's budget, batch size,
/// patience and length cap.
fn base_config(exp: &Experiment) -> RunConfig {
    if let Some(o) = exp.optimizers.iter().find(|o| o.config.optimizer == OptimizerKind::Ahc) {
        return o.config.clone();
    }
    let first = &exp.optimizers[0].config;
    RunConfig {
        batch_size: first.batch_size,
        budget: first.budget,
        patience: first.patience,
        max_len: first.max_len,
        record_interval: first.record_interval,
        ..RunConfig::preset(OptimizerKind::Ahc)
    }
}

pub fn grid_optimizers(exp: &Experiment, sigmas: &[f64], ks: &[f64]) -> Result<Vec<Optimizer>> {
    if sigmas.is_empty() || ks.is_empty() {
        return Err(HarnessError::validation("grid needs at least one sigma and one k"));
    }
    let base = base_config(exp);
    let mut out = Vec::new();
    for &sigma in sigmas {
        for &k in ks {
            let config = RunConfig { name: cell_name(sigma, k), sigma, k_fraction: k, ..base.clone() };
            config
                .validate()
                .map_err(|e| HarnessError::validation(format!("sigma {sigma}, k {k}: {e}")))?;
            out.push(Optimizer { label: path_label(&config.name), config });
        }
    }
    let mut labels: Vec<&str> = out.iter().map(|o| o.label.as_str()).collect();
    labels.sort_unstable();
    if labels.windows(2).any(|w| w[0] == w[1]) {
        return Err(HarnessError::validation("grid values repeat"));
    }
    Ok(out)
}

fn mean(xs: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = xs.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

pub fn grid_rows(exp: &Experiment, optimizers: &[Optimizer], rows: &[SummaryRow]) -> Vec<GridRow> {
    let mut out = Vec::new();
    for task in &exp.tasks {
        for o in optimizers {
            let cell: Vec<&SummaryRow> =
                rows.iter().filter(|r| r.task == task.name && r.optimizer == o.config.name).collect();
            let good: Vec<&&SummaryRow> = cell.iter().filter(|r| r.ok()).collect();
            out.push(GridRow {
                task: task.name.clone(),
                sigma: o.config.sigma,
                k: o.config.k_fraction,
                optimizer: o.config.name.clone(),
                replicates: good.len(),
                failed: cell.len() - good.len(),
                auc_plain: mean(good.iter().map(|r| r.auc_plain)),
                auc_filtered: mean(good.iter().map(|r| r.auc_filtered)),
                auc_diverse: mean(good.iter().map(|r| r.auc_diverse)),
                auc_combined: mean(good.iter().map(|r| r.auc_combined)),
            });
        }
    }
    out
}

/// `grid <manifest> --sigma .. --k .. -o <dir>`: every (σ, K) pair runs as
/// its own AHC optimizer under the manifest's tasks and replicates.
pub fn cmd_grid(
    manifest: &Path,
    sigmas: &[f64],
    ks: &[f64],
    out: &Path,
    charge_invalid: bool,
) -> Result<(Vec<GridRow>, Vec<SummaryRow>)> {
    if sigmas.is_empty() || ks.is_empty() {
        return Err(HarnessError::validation("grid needs at least one sigma and one k"));
    }
    let exp = Experiment::load(manifest, charge_invalid)?;
    let optimizers = grid_optimizers(&exp, sigmas, ks)?;
    let rows = run_experiment(&exp, &optimizers, out)?;
    let grid = grid_rows(&exp, &optimizers, &rows);
    let path = out.join(GRID_FILE);
    let mut w = csv::Writer::from_writer(Vec::new());
    for g in &grid {
        w.serialize(g).map_err(|e| HarnessError::format(&path, e))?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::format(&path, e))?;
    write_file(&path, &bytes)?;
    Ok((grid, rows))
}

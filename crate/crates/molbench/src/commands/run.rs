use std::path::{Path, PathBuf};

use molbench_core::metrics::{compute_all, MetricConfig, MetricReport};
use molbench_core::optimize::{run_optimization_with, RunConfig, RunResult};
use molbench_core::oracle::OracleRecord;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::formats::write_stats;
use crate::io::{write_file, write_json};
use crate::manifest::{replicate_seed, Experiment, Optimizer};
use crate::parallel::Rayon;

pub const SUMMARY_FILE: &str = "summary.csv";
pub const STATS_FILE: &str = "stats.json";

/// One row of `summary.csv`. On failure the AUC fields are empty and
/// `error` says why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub task: String,
    pub optimizer: String,
    pub replicate: u32,
    pub seed: u64,
    pub auc_plain: Option<f64>,
    pub auc_filtered: Option<f64>,
    pub auc_diverse: Option<f64>,
    pub auc_combined: Option<f64>,
    pub stop_reason: Option<String>,
    pub calls_used: Option<u64>,
    #[serde(default)]
    pub error: Option<String>,
}

impl SummaryRow {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

/// Contents of `rep<k>.report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub task: String,
    pub optimizer: String,
    pub replicate: u32,
    pub config: RunConfig,
    pub charge_invalid: bool,
    pub stop_reason: String,
    pub steps_taken: usize,
    pub calls_used: u64,
    pub final_model_digest: String,
    pub metrics: MetricReport,
}

/// One (task, optimizer, replicate) cell of an experiment.
#[derive(Debug, Clone, Copy)]
struct Unit {
    task: usize,
    optimizer: usize,
    replicate: u32,
}

pub fn unit_dir(out: &Path, task_label: &str, optimizer_label: &str) -> PathBuf {
    out.join(task_label).join(optimizer_label)
}

pub fn log_path(dir: &Path, replicate: u32) -> PathBuf {
    dir.join(format!("rep{replicate}.jsonl"))
}

pub fn report_path(dir: &Path, replicate: u32) -> PathBuf {
    dir.join(format!("rep{replicate}.report.json"))
}

pub fn encode_log(log: &[OracleRecord]) -> Vec<u8> {
    let mut out = Vec::new();
    for r in log {
        serde_json::to_writer(&mut out, r).expect("records serialize");
        out.push(b'\n');
    }
    out
}

/// Run every unit of `exp` with the given optimizer list and write the
/// per-unit files, `stats.json` and `summary.csv` under `out`. Failed units
/// are reported in their row; the rest still run.
pub fn run_experiment(exp: &Experiment, optimizers: &[Optimizer], out: &Path) -> Result<Vec<SummaryRow>> {
    let mut units = Vec::new();
    for task in 0..exp.tasks.len() {
        for optimizer in 0..optimizers.len() {
            for replicate in 0..exp.replicates {
                units.push(Unit { task, optimizer, replicate });
            }
        }
    }
    write_stats(&out.join(STATS_FILE), &exp.stats)?;
    let rows: Vec<SummaryRow> = units.par_iter().map(|u| run_unit(exp, optimizers, *u, out)).collect();
    write_summary(&out.join(SUMMARY_FILE), &rows)?;
    Ok(rows)
}

fn run_unit(exp: &Experiment, optimizers: &[Optimizer], u: Unit, out: &Path) -> SummaryRow {
    let task = &exp.tasks[u.task];
    let opt = &optimizers[u.optimizer];
    let seed = replicate_seed(exp.master_seed, u.replicate);
    let mut row = SummaryRow {
        task: task.name.clone(),
        optimizer: opt.config.name.clone(),
        replicate: u.replicate,
        seed,
        auc_plain: None,
        auc_filtered: None,
        auc_diverse: None,
        auc_combined: None,
        stop_reason: None,
        calls_used: None,
        error: None,
    };
    let mut cfg = opt.config.clone();
    cfg.seed = seed;
    cfg.objective = task.name.clone();
    let dir = unit_dir(out, &task.label, &opt.label);
    match execute(exp, &cfg, &dir, u.replicate) {
        Ok((result, metrics)) => {
            row.auc_plain = Some(metrics.auc_plain);
            row.auc_filtered = Some(metrics.auc_filtered);
            row.auc_diverse = Some(metrics.auc_diverse);
            row.auc_combined = Some(metrics.auc_combined);
            row.stop_reason = Some(result.stop_reason.as_str().to_string());
            row.calls_used = Some(result.calls_used);
            log::info!(
                "{} / {} / rep{}: auc {:.4} after {} calls ({})",
                row.task,
                row.optimizer,
                u.replicate,
                metrics.auc_plain,
                result.calls_used,
                result.stop_reason.as_str()
            );
        }
        Err(e) => {
            log::error!("{} / {} / rep{} failed: {e}", row.task, row.optimizer, u.replicate);
            row.error = Some(e.to_string());
        }
    }
    row
}

fn execute(exp: &Experiment, cfg: &RunConfig, dir: &Path, replicate: u32) -> Result<(RunResult, MetricReport)> {
    let objective = exp.tasks.iter().find(|t| t.name == cfg.objective).expect("task exists").objective.clone();
    let result = run_optimization_with(&Rayon, cfg, &exp.prior, Box::new(objective), exp.charge_invalid)
        .map_err(|e| HarnessError::validation(format!("{}: {e}", cfg.name)))?;
    write_file(&log_path(dir, replicate), &encode_log(&result.log))?;
    let metric_cfg = MetricConfig { record_interval: cfg.record_interval, ..exp.metrics };
    let metrics = compute_all(&result.log, &exp.stats, cfg.budget, &metric_cfg)
        .map_err(|e| HarnessError::Runtime(format!("metrics: {e}")))?;
    let report = RunReport {
        task: cfg.objective.clone(),
        optimizer: cfg.name.clone(),
        replicate,
        config: cfg.clone(),
        charge_invalid: exp.charge_invalid,
        stop_reason: result.stop_reason.as_str().to_string(),
        steps_taken: result.steps_taken,
        calls_used: result.calls_used,
        final_model_digest: result.final_model_digest.clone(),
        metrics: metrics.clone(),
    };
    write_json(&report_path(dir, replicate), &report)?;
    Ok((result, metrics))
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| HarnessError::format(path, e))?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::format(path, e))?;
    write_file(path, &bytes)
}

/// `run <manifest> -o <dir>`.
pub fn cmd_run(manifest: &Path, out: &Path, charge_invalid: bool) -> Result<Vec<SummaryRow>> {
    let exp = Experiment::load(manifest, charge_invalid)?;
    run_experiment(&exp, &exp.optimizers, out)
}

/// Turn failed rows into a runtime error after everything was written.
pub fn check_rows(rows: &[SummaryRow]) -> Result<()> {
    let failed = rows.iter().filter(|r| !r.ok()).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(HarnessError::Runtime(format!("{failed} of {} runs failed; see summary.csv", rows.len())))
    }
}

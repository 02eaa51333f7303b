use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use molbench_core::chem::{canonical_key, parse_smiles};
use molbench_core::metrics::{compute_all, rank_order, scored_molecules, MetricConfig, MetricReport, Series};
use molbench_core::oracle::OracleRecord;
use molbench_core::refstats::{denovo_fraction, ReferenceStats};
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::error::{HarnessError, Result};
use crate::formats::read_stats;
use crate::io::{path_label, read_json, read_text, write_file};

use super::run::{log_path, report_path, unit_dir, RunReport, SummaryRow, STATS_FILE, SUMMARY_FILE};

pub const RANKS_FILE: &str = "ranks.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const DRIFT_FILE: &str = "drift.csv";
pub const PLOT_FILE: &str = "plot_data.csv";
pub const CURVES_FILE: &str = "curves.csv";

pub const METRICS: [&str; 4] = ["auc_plain", "auc_filtered", "auc_diverse", "auc_combined"];

#[derive(Debug, Clone)]
pub struct ReportOptions {
    /// Reference statistics for diagnostics and third-party logs; otherwise
    /// each result directory's own `stats.json` is used.
    pub stats: Option<PathBuf>,
    /// Budget assumed for third-party logs.
    pub budget: u64,
    pub metrics: MetricConfig,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions { stats: None, budget: 10_000, metrics: MetricConfig::default() }
    }
}

/// A run as the report sees it.
#[derive(Debug, Clone)]
pub struct RunEntry {
    pub task: String,
    pub optimizer: String,
    pub replicate: u32,
    pub aucs: [Option<f64>; 4],
    pub log: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub stats: Option<PathBuf>,
    /// Read from an external JSONL log rather than a summary row.
    pub external: bool,
    series: Option<Series>,
}

impl RunEntry {
    fn from_row(row: &SummaryRow, root: &Path) -> Self {
        let dir = unit_dir(root, &path_label(&row.task), &path_label(&row.optimizer));
        let stats = root.join(STATS_FILE);
        RunEntry {
            task: row.task.clone(),
            optimizer: row.optimizer.clone(),
            replicate: row.replicate,
            aucs: if row.ok() { [row.auc_plain, row.auc_filtered, row.auc_diverse, row.auc_combined] } else { [None; 4] },
            log: Some(log_path(&dir, row.replicate)),
            report: Some(report_path(&dir, row.replicate)),
            stats: stats.is_file().then_some(stats),
            external: false,
            series: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub metric: String,
    pub rank: usize,
    pub optimizer: String,
    /// Mean over tasks of the per-task replicate mean.
    pub mean_auc: f64,
    pub tasks: usize,
}

/// One molecule of a run's final top-k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub task: String,
    pub optimizer: String,
    pub replicate: u32,
    pub rank: usize,
    pub key: String,
    pub score: f64,
    pub mw: Option<f64>,
    pub mw_z: Option<f64>,
    pub logp: Option<f64>,
    pub logp_z: Option<f64>,
    pub denovo_fraction: Option<f64>,
    pub filter_pass: bool,
}

/// Per-run averages of the diagnostic rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftRow {
    pub task: String,
    pub optimizer: String,
    pub replicate: u32,
    pub molecules: usize,
    pub mean_mw_z: Option<f64>,
    pub mean_logp_z: Option<f64>,
    pub mean_denovo_fraction: Option<f64>,
    pub filter_pass_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub task: String,
    pub optimizer: String,
    pub replicate: u32,
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub task: String,
    pub optimizer: String,
    pub replicate: u32,
    pub metric: String,
    pub calls: u64,
    pub top10: f64,
}

#[derive(Debug, Default)]
pub struct ReportOutput {
    pub runs: Vec<RunEntry>,
    pub ranks: Vec<RankRow>,
    pub diagnostics: Vec<DiagnosticRow>,
    pub drift: Vec<DriftRow>,
    pub warnings: Vec<String>,
}

struct Ingest<'o> {
    opts: &'o ReportOptions,
    runs: Vec<RunEntry>,
    seen: BTreeSet<(String, String, u32)>,
    warnings: Vec<String>,
    stats: BTreeMap<PathBuf, Option<ReferenceStats>>,
}

impl Ingest<'_> {
    fn warn(&mut self, msg: String) {
        log::warn!("{msg}");
        self.warnings.push(msg);
    }

    fn push(&mut self, run: RunEntry) {
        let id = (run.task.clone(), run.optimizer.clone(), run.replicate);
        if self.seen.insert(id) {
            self.runs.push(run);
        } else {
            let msg = format!("duplicate run {} / {} / rep{} ignored", run.task, run.optimizer, run.replicate);
            self.warn(msg);
        }
    }

    fn stats_for(&mut self, path: Option<&Path>) -> Option<ReferenceStats> {
        let path = self.opts.stats.as_deref().or(path)?.to_path_buf();
        if !self.stats.contains_key(&path) {
            let loaded = match read_stats(&path) {
                Ok(s) => Some(s),
                Err(e) => {
                    self.warn(e.to_string());
                    None
                }
            };
            self.stats.insert(path.clone(), loaded);
        }
        self.stats[&path].clone()
    }

    fn summary(&mut self, path: &Path) -> Result<()> {
        let root = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        let mut rdr = csv::Reader::from_path(path).map_err(|e| HarnessError::format(path, e))?;
        for (i, rec) in rdr.deserialize::<SummaryRow>().enumerate() {
            match rec {
                Ok(row) => self.push(RunEntry::from_row(&row, &root)),
                Err(e) => self.warn(format!("{} row {}: {e}", path.display(), i + 2)),
            }
        }
        Ok(())
    }

    /// A JSONL log with no report next to it: `<task>/<model>/rep<k>.jsonl`
    /// or `<task>/<model>.jsonl`.
    fn external(&mut self, path: &Path, root: &Path) {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
        let parent = |p: &Path| p.parent().and_then(Path::file_name).and_then(|s| s.to_str()).map(str::to_string);
        let (task, optimizer, replicate) = match stem.strip_prefix("rep").and_then(|k| k.parse::<u32>().ok()) {
            Some(k) => {
                let opt_dir = path.parent().unwrap_or(root);
                (parent(opt_dir).unwrap_or_default(), parent(path).unwrap_or_default(), k)
            }
            None => (parent(path).unwrap_or_default(), stem.to_string(), 0),
        };
        let root_stats = root.join(STATS_FILE);
        let Some(stats) = self.stats_for(root_stats.is_file().then_some(root_stats.as_path())) else {
            self.warn(format!("{}: no reference statistics, log skipped (pass --stats)", path.display()));
            return;
        };
        let log = match read_external_log(path) {
            Ok((log, bad)) => {
                for b in bad {
                    self.warn(b);
                }
                log
            }
            Err(e) => {
                self.warn(e.to_string());
                return;
            }
        };
        let budget = self.opts.budget;
        let kept: Vec<OracleRecord> = log.iter().filter(|r| r.call_index <= budget).cloned().collect();
        if kept.len() < log.len() {
            self.warn(format!("{}: {} calls beyond budget {budget} ignored", path.display(), log.len() - kept.len()));
        }
        match compute_all(&kept, &stats, budget, &self.opts.metrics) {
            Ok(m) => self.push(RunEntry {
                task,
                optimizer,
                replicate,
                aucs: [Some(m.auc_plain), Some(m.auc_filtered), Some(m.auc_diverse), Some(m.auc_combined)],
                log: Some(path.to_path_buf()),
                report: None,
                stats: self.opts.stats.clone().or_else(|| root_stats.is_file().then_some(root_stats)),
                external: true,
                series: Some(m.series),
            }),
            Err(e) => self.warn(format!("{}: {e}", path.display())),
        }
    }
}

/// Records of a third-party log, keys canonicalized where they parse.
/// Malformed lines come back as warnings.
pub fn read_external_log(path: &Path) -> Result<(Vec<OracleRecord>, Vec<String>)> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    let mut bad = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<OracleRecord>(line) {
            Ok(mut r) if r.score.is_finite() => {
                if r.valid {
                    if let Ok(m) = parse_smiles(&r.key) {
                        r.key = canonical_key(&m);
                    }
                }
                out.push(r);
            }
            Ok(_) => bad.push(format!("{} line {}: non-finite score", path.display(), i + 1)),
            Err(e) => bad.push(format!("{} line {}: {e}", path.display(), i + 1)),
        }
    }
    out.sort_by_key(|r| r.call_index);
    Ok((out, bad))
}

fn read_own_log(path: &Path) -> Result<Vec<OracleRecord>> {
    read_text(path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| HarnessError::format(path, e)))
        .collect()
}

fn collect<'o>(inputs: &[PathBuf], opts: &'o ReportOptions) -> Result<Ingest<'o>> {
    let mut ing = Ingest { opts, runs: Vec::new(), seen: BTreeSet::new(), warnings: Vec::new(), stats: BTreeMap::new() };
    for input in inputs {
        if input.is_file() {
            match input.extension().and_then(|e| e.to_str()) {
                Some("jsonl") => {
                    let root = input.parent().unwrap_or(Path::new(".")).to_path_buf();
                    ing.external(input, &root);
                }
                _ => ing.summary(input)?,
            }
            continue;
        }
        if !input.is_dir() {
            return Err(HarnessError::io(input, std::io::Error::from(std::io::ErrorKind::NotFound)));
        }
        let mut summaries = Vec::new();
        let mut logs = Vec::new();
        for entry in WalkDir::new(input).sort_by_file_name() {
            let entry = entry.map_err(|e| HarnessError::Runtime(e.to_string()))?;
            let p = entry.path();
            if !entry.file_type().is_file() {
                continue;
            }
            if p.file_name().and_then(|n| n.to_str()) == Some(SUMMARY_FILE) {
                summaries.push(p.to_path_buf());
            } else if p.extension().and_then(|e| e.to_str()) == Some("jsonl") {
                logs.push(p.to_path_buf());
            }
        }
        let before = ing.runs.len();
        for s in &summaries {
            ing.summary(s)?;
        }
        let claimed: BTreeSet<PathBuf> = ing.runs[before..].iter().filter_map(|r| r.log.clone()).collect();
        for l in logs.iter().filter(|l| !claimed.contains(*l)) {
            let has_report = l.with_extension("report.json").is_file();
            if !has_report {
                ing.external(l, input);
            }
        }
    }
    if ing.runs.is_empty() {
        return Err(HarnessError::validation("no runs found in the report inputs"));
    }
    Ok(ing)
}

/// Rank optimizers per metric by the mean over tasks of per-task replicate
/// means. Equal means share the better rank.
pub fn rank_table(runs: &[RunEntry]) -> Vec<RankRow> {
    let mut out = Vec::new();
    for (m, metric) in METRICS.iter().enumerate() {
        let mut per_cell: BTreeMap<(&str, &str), Vec<f64>> = BTreeMap::new();
        for r in runs {
            if let Some(v) = r.aucs[m] {
                per_cell.entry((r.optimizer.as_str(), r.task.as_str())).or_default().push(v);
            }
        }
        let mut per_opt: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for ((opt, _), vals) in &per_cell {
            per_opt.entry(opt).or_default().push(vals.iter().sum::<f64>() / vals.len() as f64);
        }
        let mut scored: Vec<(&str, f64, usize)> = per_opt
            .into_iter()
            .map(|(o, means)| (o, means.iter().sum::<f64>() / means.len() as f64, means.len()))
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
        let mut rank = 0;
        for (i, &(opt, mean, tasks)) in scored.iter().enumerate() {
            if i == 0 || mean != scored[i - 1].1 {
                rank = i + 1;
            }
            out.push(RankRow { metric: metric.to_string(), rank, optimizer: opt.to_string(), mean_auc: mean, tasks });
        }
    }
    out
}

fn zscore(x: Option<f64>, mean: f64, std: f64) -> Option<f64> {
    x.filter(|_| std > 0.0).map(|x| (x - mean) / std)
}

fn mean_of(xs: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = xs.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Property drift of the final top-k of one run.
pub fn diagnose(run: &RunEntry, log: &[OracleRecord], stats: &ReferenceStats, cfg: &MetricConfig) -> Result<Vec<DiagnosticRow>> {
    let mut scored = scored_molecules(log, stats, cfg.filter).map_err(|e| HarnessError::Runtime(e.to_string()))?;
    scored.sort_by(rank_order);
    let mut rows = Vec::new();
    for (i, m) in scored.iter().take(cfg.k).enumerate() {
        let denovo = match &m.fingerprint {
            Some(fp) if m.mw.is_some() => {
                Some(denovo_fraction(fp, stats).map_err(|e| HarnessError::Runtime(e.to_string()))?)
            }
            _ => None,
        };
        rows.push(DiagnosticRow {
            task: run.task.clone(),
            optimizer: run.optimizer.clone(),
            replicate: run.replicate,
            rank: i + 1,
            key: m.key.clone(),
            score: m.score,
            mw: m.mw,
            mw_z: zscore(m.mw, stats.mw_mean, stats.mw_std),
            logp: m.logp,
            logp_z: zscore(m.logp, stats.logp_mean, stats.logp_std),
            denovo_fraction: denovo,
            filter_pass: m.verdict.pass,
        });
    }
    Ok(rows)
}

fn drift_row(run: &RunEntry, rows: &[DiagnosticRow]) -> DriftRow {
    DriftRow {
        task: run.task.clone(),
        optimizer: run.optimizer.clone(),
        replicate: run.replicate,
        molecules: rows.len(),
        mean_mw_z: mean_of(rows.iter().map(|r| r.mw_z)),
        mean_logp_z: mean_of(rows.iter().map(|r| r.logp_z)),
        mean_denovo_fraction: mean_of(rows.iter().map(|r| r.denovo_fraction)),
        filter_pass_fraction: if rows.is_empty() {
            0.0
        } else {
            rows.iter().filter(|r| r.filter_pass).count() as f64 / rows.len() as f64
        },
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(header).map_err(|e| HarnessError::format(path, e))?;
    }
    for r in rows {
        w.serialize(r).map_err(|e| HarnessError::format(path, e))?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::format(path, e))?;
    write_file(path, &bytes)
}

/// `report <dirs or summary CSVs> -o <dir>`.
pub fn cmd_report(inputs: &[PathBuf], out: &Path, opts: &ReportOptions) -> Result<ReportOutput> {
    let mut ing = collect(inputs, opts)?;
    let ranks = rank_table(&ing.runs);

    let mut diagnostics = Vec::new();
    let mut drift = Vec::new();
    let mut plot = Vec::new();
    let mut curves = Vec::new();
    let runs = std::mem::take(&mut ing.runs);
    for run in &runs {
        for (m, metric) in METRICS.iter().enumerate() {
            if let Some(value) = run.aucs[m] {
                plot.push(PlotRow {
                    task: run.task.clone(),
                    optimizer: run.optimizer.clone(),
                    replicate: run.replicate,
                    metric: metric.to_string(),
                    value,
                });
            }
        }
        if run.aucs.iter().all(Option::is_none) {
            continue;
        }
        let series = match (&run.series, &run.report) {
            (Some(s), _) => Some(s.clone()),
            (None, Some(p)) if p.is_file() => match read_json::<RunReport>(p) {
                Ok(r) => Some(r.metrics.series),
                Err(e) => {
                    ing.warn(e.to_string());
                    None
                }
            },
            _ => None,
        };
        if let Some(s) = series {
            curves.extend(curve_rows(run, &s));
        }
        let Some(log_file) = run.log.as_deref().filter(|p| p.is_file()) else {
            ing.warn(format!("{} / {} / rep{}: log not found, no diagnostics", run.task, run.optimizer, run.replicate));
            continue;
        };
        let Some(stats) = ing.stats_for(run.stats.as_deref()) else {
            ing.warn(format!("{} / {} / rep{}: no reference statistics, no diagnostics", run.task, run.optimizer, run.replicate));
            continue;
        };
        let log: Result<Vec<OracleRecord>> =
            if run.external { read_external_log(log_file).map(|(l, _)| l) } else { read_own_log(log_file) };
        match log.and_then(|l| diagnose(run, &l, &stats, &opts.metrics)) {
            Ok(rows) => {
                drift.push(drift_row(run, &rows));
                diagnostics.extend(rows);
            }
            Err(e) => ing.warn(e.to_string()),
        }
    }

    write_csv(&out.join(RANKS_FILE), &ranks, &["metric", "rank", "optimizer", "mean_auc", "tasks"])?;
    write_csv(
        &out.join(DIAGNOSTICS_FILE),
        &diagnostics,
        &["task", "optimizer", "replicate", "rank", "key", "score", "mw", "mw_z", "logp", "logp_z", "denovo_fraction", "filter_pass"],
    )?;
    write_csv(
        &out.join(DRIFT_FILE),
        &drift,
        &["task", "optimizer", "replicate", "molecules", "mean_mw_z", "mean_logp_z", "mean_denovo_fraction", "filter_pass_fraction"],
    )?;
    write_csv(&out.join(PLOT_FILE), &plot, &["task", "optimizer", "replicate", "metric", "value"])?;
    write_csv(&out.join(CURVES_FILE), &curves, &["task", "optimizer", "replicate", "metric", "calls", "top10"])?;
    Ok(ReportOutput { runs, ranks, diagnostics, drift, warnings: ing.warnings })
}

fn curve_rows(run: &RunEntry, s: &Series) -> Vec<CurveRow> {
    let cols: [&[f64]; 4] = [&s.plain, &s.filtered, &s.diverse, &s.combined];
    let mut out = Vec::new();
    for (metric, vals) in METRICS.iter().zip(cols) {
        for (&calls, &top10) in s.points.iter().zip(vals) {
            out.push(CurveRow {
                task: run.task.clone(),
                optimizer: run.optimizer.clone(),
                replicate: run.replicate,
                metric: metric.to_string(),
                calls,
                top10,
            });
        }
    }
    out
}

/// Human-readable rank table.
pub fn format_ranks(ranks: &[RankRow]) -> String {
    let mut s = String::new();
    for metric in METRICS {
        s.push_str(metric);
        s.push('\n');
        for r in ranks.iter().filter(|r| r.metric == metric) {
            s.push_str(&format!("  {:>3}  {:<24} {:.4}  ({} tasks)\n", r.rank, r.optimizer, r.mean_auc, r.tasks));
        }
    }
    s
}

/// Metrics of one report, for callers that only have a `MetricReport`.
pub fn aucs_of(m: &MetricReport) -> [f64; 4] {
    [m.auc_plain, m.auc_filtered, m.auc_diverse, m.auc_combined]
}

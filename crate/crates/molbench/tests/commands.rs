mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Stdio};

use common::{fixture, read, small, write_json, TINY};
use molbench::commands::report::{cmd_report, rank_table, ReportOptions, METRICS};
use molbench::commands::run::{cmd_run, SummaryRow};
use molbench::commands::{cmd_grid, cmd_pretrain, cmd_stats, PretrainJob};
use molbench::formats::{read_checkpoint, read_stats};
use molbench::HarnessError;
use molbench_core::policy::{GruLM, PretrainConfig, Vocabulary};
use molbench_core::refstats::FingerprintParams;
use serde_json::json;

fn rows(path: &Path) -> Vec<SummaryRow> {
    csv::Reader::from_path(path).unwrap().deserialize().map(Result::unwrap).collect()
}

fn files_with_suffix(dir: &Path, suffix: &str) -> usize {
    walkdir::WalkDir::new(dir)
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_name().to_string_lossy().ends_with(suffix))
        .count()
}

#[test]
fn stats_counts_parseable_records_and_is_stable() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.smi");
    std::fs::write(&corpus, "# header\nCCO ethanol\n\nc1ccccc1\nC1CC\nCC(=O)O\n").unwrap();
    let out = dir.path().join("s.json");
    let s = cmd_stats(&corpus, &out, FingerprintParams::default()).unwrap();
    assert_eq!((s.n_molecules, s.skipped), (3, 1));
    let first = read(&out);
    cmd_stats(&corpus, &out, FingerprintParams::default()).unwrap();
    assert_eq!(read(&out), first);
    assert_eq!(read_stats(&out).unwrap(), s);

    let fixture_stats = read_stats(&f.stats()).unwrap();
    assert_eq!(fixture_stats.n_molecules, 600);

    let missing = dir.path().join("absent.smi");
    let err = cmd_stats(&missing, &out, FingerprintParams::default()).unwrap_err();
    assert!(matches!(err, HarnessError::Io { ref path, .. } if *path == missing));
    assert!(err.to_string().contains("absent.smi"));
}

#[test]
fn zero_epoch_pretraining_writes_the_initialization() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    let job = PretrainJob {
        corpus: f.corpus(),
        hyper: TINY,
        config: PretrainConfig { epochs: 0, ..PretrainConfig::default() },
        init_seed: 11,
        out: dir.path().join("init.mbck"),
        epochs_csv: None,
    };
    cmd_pretrain(&job).unwrap();
    let (model, prov) = read_checkpoint(&job.out).unwrap();
    let lines = common::chain_corpus(600, 12);
    let vocab = Vocabulary::from_corpus(lines.iter().map(String::as_str)).unwrap();
    assert_eq!(model, GruLM::new(vocab, TINY, 11).unwrap());
    assert_eq!(prov.unwrap().init_seed, 11);
    let csv = read(&dir.path().join("init.mbck.epochs.csv"));
    assert_eq!(csv.trim(), "epoch,mean_nll,mean_token_nll,sequences,tokens");
}

#[test]
fn pretraining_lowers_the_nll() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    let job = PretrainJob {
        corpus: f.corpus(),
        hyper: TINY,
        config: PretrainConfig { epochs: 3, batch_size: 32, lr: 1e-2, seed: 2 },
        init_seed: 2,
        out: dir.path().join("p.mbck"),
        epochs_csv: Some(dir.path().join("nll.csv")),
    };
    let o = cmd_pretrain(&job).unwrap();
    assert_eq!(o.epochs.len(), 3);
    assert!(o.epochs[2].mean_nll < o.epochs[0].mean_nll);
    assert_eq!(read(&dir.path().join("nll.csv")).lines().count(), 4);
}

#[test]
fn run_bookkeeping_and_determinism() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    let m = f.manifest(json!([small("AHC", 100), small("RANDOM", 100)]), 3, 42);
    let manifest = write_json(&dir.path().join("m.json"), &m);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let ra = cmd_run(&manifest, &a, false).unwrap();
    assert_eq!(ra.len(), 6);
    assert!(ra.iter().all(SummaryRow::ok));
    assert_eq!(files_with_suffix(&a, ".jsonl"), 6);
    assert_eq!(files_with_suffix(&a, ".report.json"), 6);
    assert_eq!(rows(&a.join("summary.csv")), ra);
    for r in &ra {
        let [p, fl, d, c] = [r.auc_plain, r.auc_filtered, r.auc_diverse, r.auc_combined].map(Option::unwrap);
        assert!(c <= fl && fl <= p && c <= d && d <= p, "{r:?}");
        assert!(r.calls_used.unwrap() <= 100);
    }
    // replicate seeds do not depend on the optimizer
    assert_eq!(ra[0].seed, ra[3].seed);
    assert_ne!(ra[0].seed, ra[1].seed);

    cmd_run(&manifest, &b, false).unwrap();
    assert_eq!(read(&a.join("summary.csv")), read(&b.join("summary.csv")));
    for rep in 0..3 {
        for opt in ["AHC", "RANDOM"] {
            let rel = format!("chain_similarity/{opt}/rep{rep}.jsonl");
            assert_eq!(read(&a.join(&rel)), read(&b.join(&rel)), "{rel}");
        }
    }
}

#[test]
fn zero_budget_gives_zero_aucs() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_json(&dir.path().join("m.json"), &f.manifest(json!([small("AHC", 0)]), 1, 0));
    let r = cmd_run(&manifest, &dir.path().join("out"), false).unwrap();
    assert_eq!(r[0].auc_plain, Some(0.0));
    assert_eq!(r[0].auc_filtered, Some(0.0));
    assert_eq!(r[0].auc_diverse, Some(0.0));
    assert_eq!(r[0].auc_combined, Some(0.0));
    assert_eq!(r[0].calls_used, Some(0));
    assert_eq!(read(&dir.path().join("out/chain_similarity/AHC/rep0.jsonl")), "");
}

#[test]
fn mismatched_digests_stop_before_running() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    let other = dir.path().join("other.smi");
    std::fs::write(&other, "CCO\nCCN\nCCC\n").unwrap();
    let other_stats = dir.path().join("other_stats.json");
    cmd_stats(&other, &other_stats, FingerprintParams::default()).unwrap();

    let mut m = f.manifest(json!([small("AHC", 100)]), 1, 0);
    m["stats"] = json!(other_stats);
    let manifest = write_json(&dir.path().join("m.json"), &m);
    let out = dir.path().join("out");
    let err = cmd_run(&manifest, &out, false).unwrap_err();
    assert!(matches!(err, HarnessError::Validation(_)), "{err}");
    assert_eq!(err.exit_code(), 2);
    assert!(!out.exists());

    let mut m = f.manifest(json!([small("AHC", 100)]), 1, 0);
    m["corpus_digest"] = json!("00");
    let manifest = write_json(&dir.path().join("m2.json"), &m);
    assert!(matches!(cmd_run(&manifest, &out, false), Err(HarnessError::Validation(_))));

    let mut m = f.manifest(json!([small("AHC", 100)]), 1, 0);
    m["prior_digest"] = json!("0000000000000000");
    let manifest = write_json(&dir.path().join("m3.json"), &m);
    assert!(matches!(cmd_run(&manifest, &out, false), Err(HarnessError::Validation(_))));
    assert!(!out.exists());
}

#[test]
fn grid_cells_and_reproduction() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    let ahc = json!({ "optimizer": "AHC", "batch_size": 32, "budget": 96, "max_len": 60, "record_interval": 50 });
    let manifest = write_json(&dir.path().join("m.json"), &f.manifest(json!([ahc]), 1, 5));
    let (grid, rows) = cmd_grid(&manifest, &[60.0, 120.0, 500.0], &[0.25, 1.0], &dir.path().join("grid"), false).unwrap();
    assert_eq!(grid.len(), 6);
    assert_eq!(rows.len(), 6);
    assert_eq!(read(&dir.path().join("grid/grid.csv")).lines().count(), 7);
    assert!(grid.iter().all(|g| g.replicates == 1 && g.failed == 0));

    let run = cmd_run(&manifest, &dir.path().join("run"), false).unwrap();
    let cell = grid.iter().find(|g| g.sigma == 120.0 && g.k == 0.25).unwrap();
    assert_eq!(cell.auc_plain, run[0].auc_plain);
    assert_eq!(
        read(&dir.path().join("grid/chain_similarity/AHC_s120_k0.25/rep0.jsonl")),
        read(&dir.path().join("run/chain_similarity/AHC/rep0.jsonl"))
    );

    let err = cmd_grid(&manifest, &[], &[0.25], &dir.path().join("empty"), false).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

fn summary_row(task: &str, opt: &str, rep: u32, auc: f64) -> SummaryRow {
    SummaryRow {
        task: task.into(),
        optimizer: opt.into(),
        replicate: rep,
        seed: 0,
        auc_plain: Some(auc),
        auc_filtered: Some(auc * 0.9),
        auc_diverse: Some(auc * 0.8),
        auc_combined: Some(auc * 0.7),
        stop_reason: Some("budget".into()),
        calls_used: Some(100),
        error: None,
    }
}

fn write_summary(path: &Path, rows: &[SummaryRow]) {
    molbench::commands::run::write_summary(path, rows).unwrap();
}

#[test]
fn report_ranks_dominating_optimizer_first() {
    let dir = tempfile::tempdir().unwrap();
    let mut rs = Vec::new();
    for task in ["t1", "t2"] {
        for rep in 0..3 {
            rs.push(summary_row(task, "A", rep, 0.6 + 0.01 * rep as f64));
            rs.push(summary_row(task, "B", rep, 0.3 + 0.01 * rep as f64));
        }
    }
    let summary = dir.path().join("summary.csv");
    write_summary(&summary, &rs);
    let out = cmd_report(&[summary], &dir.path().join("rep"), &ReportOptions::default()).unwrap();
    for metric in METRICS {
        let ranked: Vec<(&str, usize)> =
            out.ranks.iter().filter(|r| r.metric == metric).map(|r| (r.optimizer.as_str(), r.rank)).collect();
        assert_eq!(ranked, [("A", 1), ("B", 2)], "{metric}");
    }

    // rank consistency: recompute from the emitted plot data alone
    let mut per: BTreeMap<(String, String, String), Vec<f64>> = BTreeMap::new();
    let mut rdr = csv::Reader::from_path(dir.path().join("rep/plot_data.csv")).unwrap();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        per.entry((rec[3].to_string(), rec[1].to_string(), rec[0].to_string())).or_default().push(rec[4].parse().unwrap());
    }
    let mut by_opt: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for ((metric, opt, _), v) in per {
        by_opt.entry((metric, opt)).or_default().push(v.iter().sum::<f64>() / v.len() as f64);
    }
    let mut rdr = csv::Reader::from_path(dir.path().join("rep/ranks.csv")).unwrap();
    let emitted: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(emitted.len(), 8);
    for rec in &emitted {
        let means = &by_opt[&(rec[0].to_string(), rec[2].to_string())];
        let mean = means.iter().sum::<f64>() / means.len() as f64;
        let better = by_opt
            .iter()
            .filter(|((m, _), v)| *m == rec[0] && v.iter().sum::<f64>() / v.len() as f64 > mean)
            .count();
        assert_eq!(rec[1].parse::<usize>().unwrap(), better + 1);
    }
}

#[test]
fn report_handles_single_runs_ties_and_bad_rows() {
    let dir = tempfile::tempdir().unwrap();
    let summary = dir.path().join("summary.csv");
    write_summary(&summary, &[summary_row("t", "solo", 0, 0.5)]);
    let out = cmd_report(std::slice::from_ref(&summary), &dir.path().join("r1"), &ReportOptions::default()).unwrap();
    assert_eq!(out.ranks.len(), 4);
    assert!(out.ranks.iter().all(|r| r.rank == 1 && r.optimizer == "solo"));

    let mut text = read(&summary);
    text.push_str("t,broken,not-a-number\n");
    std::fs::write(&summary, text).unwrap();
    let out = cmd_report(&[summary], &dir.path().join("r2"), &ReportOptions::default()).unwrap();
    assert_eq!(out.runs.len(), 1);
    assert!(out.warnings.iter().any(|w| w.contains("row 3")), "{:?}", out.warnings);

    let runs: Vec<_> = ["x", "y", "z"]
        .iter()
        .zip([0.4, 0.4, 0.2])
        .map(|(o, v)| summary_row("t", o, 0, v))
        .collect();
    let tied = dir.path().join("tied.csv");
    write_summary(&tied, &runs);
    let out = cmd_report(&[tied], &dir.path().join("r3"), &ReportOptions::default()).unwrap();
    let plain: Vec<usize> = out.ranks.iter().filter(|r| r.metric == "auc_plain").map(|r| r.rank).collect();
    assert_eq!(plain, [1, 1, 3]);
    assert_eq!(rank_table(&out.runs), out.ranks);
}

#[test]
fn report_diagnoses_runs_and_reference_molecules() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_json(&dir.path().join("m.json"), &f.manifest(json!([small("HC", 100)]), 2, 1));
    let results = dir.path().join("res");
    cmd_run(&manifest, &results, false).unwrap();

    // a third-party log made of corpus molecules, in a non-canonical spelling
    let ext = dir.path().join("ext/chain_similarity/corpus_model");
    std::fs::create_dir_all(&ext).unwrap();
    let lines: Vec<String> = common::chain_corpus(600, 12)
        .iter()
        .take(40)
        .enumerate()
        .map(|(i, s)| {
            let smiles: String = if s.contains('(') { s.clone() } else { s.chars().rev().collect() };
            json!({ "call_index": i + 1, "smiles": smiles, "score": (i % 7) as f64 / 7.0 }).to_string()
        })
        .collect();
    std::fs::write(ext.join("rep0.jsonl"), lines.join("\n") + "\nnot json\n").unwrap();

    let opts = ReportOptions { stats: Some(f.stats()), budget: 100, ..ReportOptions::default() };
    let out = cmd_report(&[results.clone(), dir.path().join("ext")], &dir.path().join("rep"), &opts).unwrap();
    assert_eq!(out.runs.len(), 3);
    assert!(out.warnings.iter().any(|w| w.contains("line 41")), "{:?}", out.warnings);
    let external: Vec<_> = out.diagnostics.iter().filter(|d| d.optimizer == "corpus_model").collect();
    assert_eq!(external.len(), 10);
    assert!(external.iter().all(|d| d.denovo_fraction == Some(0.0)), "{external:?}");
    assert_eq!(out.drift.len(), 3);
    assert!(out.diagnostics.iter().filter(|d| d.optimizer == "HC").count() > 0);
    for name in ["ranks.csv", "diagnostics.csv", "drift.csv", "plot_data.csv", "curves.csv"] {
        assert!(dir.path().join("rep").join(name).is_file(), "{name}");
    }
    let plot = read(&dir.path().join("rep/plot_data.csv"));
    assert_eq!(plot.lines().count(), 1 + 3 * 4);
}

#[test]
fn cli_exit_codes() {
    let f = fixture();
    let bin = env!("CARGO_BIN_EXE_molbench");
    let dir = tempfile::tempdir().unwrap();
    let status = |args: &[&str]| Command::new(bin).args(args).env("RUST_LOG", "off").stdout(Stdio::null()).stderr(Stdio::null()).status().unwrap().code();

    assert_eq!(status(&["--help"]), Some(0));
    assert_eq!(status(&["frobnicate"]), Some(2));
    let missing = dir.path().join("nope.smi");
    assert_eq!(status(&["stats", missing.to_str().unwrap(), "-o", dir.path().join("s.json").to_str().unwrap()]), Some(1));

    let bad = write_json(&dir.path().join("bad.json"), &json!({ "corpus": f.corpus() }));
    assert_eq!(status(&["run", bad.to_str().unwrap(), "-o", dir.path().join("o").to_str().unwrap()]), Some(2));

    let m = write_json(&dir.path().join("m.json"), &f.manifest(json!([small("RANDOM", 40)]), 1, 0));
    let out = dir.path().join("ok");
    assert_eq!(status(&["run", m.to_str().unwrap(), "-o", out.to_str().unwrap(), "--threads", "2"]), Some(0));
    assert!(out.join("summary.csv").is_file());
    assert_eq!(status(&["run", m.to_str().unwrap(), "-o", out.to_str().unwrap(), "--threads", "0"]), Some(2));
    let grid_out = dir.path().join("g");
    assert_eq!(status(&["grid", m.to_str().unwrap(), "--sigma", "60,120", "--k", "1", "-o", grid_out.to_str().unwrap()]), Some(0));
    assert_eq!(read(&grid_out.join("grid.csv")).lines().count(), 3);
    let rep = dir.path().join("rep");
    assert_eq!(status(&["report", out.to_str().unwrap(), "-o", rep.to_str().unwrap()]), Some(0));
    assert!(rep.join("ranks.csv").is_file());
}

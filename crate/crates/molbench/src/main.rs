use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use molbench::commands::{self, grid, report, run, stats, PretrainJob, Profile, ReportOptions};
use molbench::parallel::with_threads;
use molbench::{HarnessError, Result};
use molbench_core::policy::PretrainConfig;
use molbench_core::refstats::FingerprintParams;

#[derive(Parser)]
#[command(name = "molbench", version, about = "Sample-efficiency benchmark for molecular generative models")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reference statistics of a SMILES corpus.
    Stats {
        corpus: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2)]
        radius: u32,
        #[arg(long, default_value_t = 2048)]
        width: u32,
    },
    /// Train a prior on a SMILES corpus.
    Pretrain {
        corpus: PathBuf,
        #[arg(long, value_enum, default_value = "desk")]
        profile: Profile,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        /// Seeds both initialization and shuffling.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Per-epoch NLL table (default: `<out>.epochs.csv`).
        #[arg(long)]
        epochs_csv: Option<PathBuf>,
    },
    /// Every (task, optimizer, replicate) of a manifest.
    Run {
        manifest: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Count invalid samples against the budget.
        #[arg(long)]
        charge_invalid: bool,
    },
    /// AHC over a grid of sigma and K values.
    Grid {
        manifest: PathBuf,
        #[arg(long, num_args = 1.., value_delimiter = ',', default_values_t = grid::DEFAULT_SIGMAS)]
        sigma: Vec<f64>,
        #[arg(long, num_args = 1.., value_delimiter = ',', default_values_t = grid::DEFAULT_KS)]
        k: Vec<f64>,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long)]
        charge_invalid: bool,
    },
    /// Rank tables, property-drift diagnostics and plot data from results.
    Report {
        /// Result directories, summary CSVs or third-party JSONL logs.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long)]
        stats: Option<PathBuf>,
        /// Budget for third-party logs.
        #[arg(long, default_value_t = 10_000)]
        budget: u64,
    },
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Stats { corpus, out, radius, width } => {
            let s = commands::cmd_stats(&corpus, &out, FingerprintParams { radius, width })?;
            println!("{}", stats::summary(&s));
            Ok(())
        }
        Command::Pretrain { corpus, profile, out, epochs, batch_size, lr, seed, epochs_csv } => {
            let d = PretrainConfig::default();
            let config = PretrainConfig {
                epochs: epochs.unwrap_or(d.epochs),
                batch_size: batch_size.unwrap_or(d.batch_size),
                lr: lr.unwrap_or(d.lr),
                seed,
            };
            if config.batch_size == 0 || !(config.lr.is_finite() && config.lr > 0.0) {
                return Err(HarnessError::validation("batch size and learning rate must be positive"));
            }
            let job = PretrainJob { corpus, hyper: profile.hyper(), config, init_seed: seed, out, epochs_csv };
            let o = commands::cmd_pretrain(&job)?;
            println!(
                "{} epochs, final mean NLL {}, model digest {}",
                o.epochs.len(),
                o.epochs.last().map_or("n/a".to_string(), |e| format!("{:.4}", e.mean_nll)),
                o.model.digest()
            );
            Ok(())
        }
        Command::Run { manifest, out, charge_invalid } => {
            let rows = commands::cmd_run(&manifest, &out, charge_invalid)?;
            println!("{} runs written to {}", rows.len(), out.display());
            run::check_rows(&rows)
        }
        Command::Grid { manifest, sigma, k, out, charge_invalid } => {
            let (cells, rows) = commands::cmd_grid(&manifest, &sigma, &k, &out, charge_invalid)?;
            println!("{} grid cells, {} runs written to {}", cells.len(), rows.len(), out.display());
            run::check_rows(&rows)
        }
        Command::Report { inputs, out, stats, budget } => {
            let opts = ReportOptions { stats, budget, ..ReportOptions::default() };
            let r = commands::cmd_report(&inputs, &out, &opts)?;
            print!("{}", report::format_ranks(&r.ranks));
            if !r.warnings.is_empty() {
                println!("{} warnings", r.warnings.len());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let threads = cli.threads;
    match with_threads(threads, || dispatch(cli.command)).and_then(|r| r) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

pub mod grid;
pub mod pretrain;
pub mod report;
pub mod run;
pub mod stats;

pub use grid::{cmd_grid, GridRow};
pub use pretrain::{cmd_pretrain, PretrainJob, PretrainOutcome, Profile};
pub use report::{cmd_report, ReportOptions, ReportOutput};
pub use run::{cmd_run, run_experiment, SummaryRow};
pub use stats::cmd_stats;

//! Benchmark harness: corpus statistics, prior pretraining, budgeted
//! optimization runs, hyperparameter grids and reports on top of
//! `molbench-core`.

pub mod commands;
pub mod corpus;
pub mod error;
pub mod formats;
pub mod io;
pub mod manifest;
pub mod parallel;

pub use error::{HarnessError, Result};

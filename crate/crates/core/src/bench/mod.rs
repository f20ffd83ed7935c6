//! Seeded Monte Carlo benchmark: configs, trials, sweeps, CSV output.

pub mod config;
pub mod report;
pub mod trial;

pub use config::{load_config, parse_config, BenchConfig, Preset};
pub use report::{read_csv, write_csv, CsvRow, CSV_HEADER};
pub use trial::{
    aggregate, compute_mae, compute_rmse, run_sweep, run_trial, trial_seed, AggregateRow, StageCpu,
    SweepResult, TrialRecord,
};

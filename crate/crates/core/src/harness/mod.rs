//! Experiment campaigns: configs, seeded multi-trial runs, policy training,
//! transfer comparisons and boxplot summaries.
//!
//! A campaign with an output directory writes
//!
//! - `records.csv`: one row per trial
//! - `summary.json`: config snapshot and shot statistics
//! - `timing.csv`: wall time per trial (kept apart so records are reproducible)
//! - `traces/<method>_<system>_seed<seed>.csv`: per-iteration traces

mod campaign;
mod config;
mod stats;
mod training;
mod transfer;

pub use campaign::{
    records_from_csv, records_path, records_to_csv, run_campaign, run_prepared, shots_to_threshold,
    summarize_records_file, trace_file_name, worker_pool, Campaign, CampaignSummary, RunRecord, ShotSummary,
    ERROR_THRESHOLD, WORKERS_ENV,
};
pub use config::{ExperimentConfig, Method, PreparedExperiment};
pub use stats::{boxplot_stats, median, BoxplotStats};
pub use training::{save_outcome, train, train_many, TrainOutcome, TrainSpec};
pub use transfer::{pair_configs, reduction, transfer_eval, TransferReport, TransferRow};

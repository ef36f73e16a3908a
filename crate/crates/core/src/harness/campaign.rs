use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Method, PreparedExperiment};
use super::stats::{boxplot_stats, BoxplotStats};
use crate::error::{read_to_string, write_file, Error, Result};
use crate::rl::PolicyController;
use crate::rng::seeded;
use crate::vqe::{run_vqe, FixedShots, ShotController, VqeTrace};

/// Relative energy error that counts as reaching chemical usefulness.
pub const ERROR_THRESHOLD: f64 = 0.01;
/// Environment variable holding the worker-pool size.
pub const WORKERS_ENV: &str = "SHOTWISE_WORKERS";

/// Cumulative shots at the first iteration whose energy (shot estimate, or
/// the exact diagnostic) is within 1% of `ground_energy`.
pub fn shots_to_threshold(trace: &VqeTrace, ground_energy: f64, exact: bool) -> Option<u64> {
    let tol = ERROR_THRESHOLD * ground_energy.abs();
    trace
        .records()
        .iter()
        .find(|r| {
            let e = if exact { r.exact_energy } else { r.estimated_energy };
            (e - ground_energy).abs() < tol
        })
        .map(|r| r.cumulative_shots)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub trial: usize,
    pub seed: u64,
    pub method: Method,
    pub system: String,
    pub shots_to_threshold: Option<u64>,
    pub shots_to_threshold_exact: Option<u64>,
    pub iterations: usize,
    pub total_shots: u64,
    pub final_estimated_energy: f64,
    pub final_exact_energy: f64,
    /// Stopped by the policy's convergence rule before the iteration cap.
    pub stopped_early: bool,
    /// Kept out of `records.csv` so that records stay reproducible.
    #[serde(skip)]
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotSummary {
    pub trials: usize,
    pub reached: usize,
    pub never_reached: usize,
    /// Over the runs that reached the threshold; never-reached runs are
    /// counted, not imputed.
    pub shots_to_threshold: Option<BoxplotStats>,
    pub reached_exact: usize,
    pub shots_to_threshold_exact: Option<BoxplotStats>,
}

impl ShotSummary {
    pub fn from_records(records: &[RunRecord]) -> Result<Self> {
        let shots: Vec<f64> = records
            .iter()
            .filter_map(|r| r.shots_to_threshold)
            .map(|s| s as f64)
            .collect();
        let exact: Vec<f64> = records
            .iter()
            .filter_map(|r| r.shots_to_threshold_exact)
            .map(|s| s as f64)
            .collect();
        Ok(ShotSummary {
            trials: records.len(),
            reached: shots.len(),
            never_reached: records.len() - shots.len(),
            shots_to_threshold: (!shots.is_empty()).then(|| boxplot_stats(&shots)).transpose()?,
            reached_exact: exact.len(),
            shots_to_threshold_exact: (!exact.is_empty()).then(|| boxplot_stats(&exact)).transpose()?,
        })
    }

    pub fn median(&self) -> Option<f64> {
        self.shots_to_threshold.as_ref().map(|b| b.median)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub config: ExperimentConfig,
    pub system: String,
    pub molecule: String,
    pub bond_length_angstrom: f64,
    pub ground_energy: f64,
    pub n_cliques: usize,
    pub n_params: usize,
    pub shots: ShotSummary,
}

#[derive(Debug, Clone)]
pub struct Campaign {
    pub records: Vec<RunRecord>,
    pub traces: Vec<VqeTrace>,
    pub summary: CampaignSummary,
}

/// A rayon pool sized from `SHOTWISE_WORKERS`, or rayon's default.
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::Config(format!("{WORKERS_ENV}={v:?} is not a worker count")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))
}

fn system_label(exp: &PreparedExperiment) -> String {
    exp.config
        .hamiltonian
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| exp.problem.hamiltonian.metadata.molecule.clone())
}

fn file_safe(s: &str) -> String {
    s.chars()
        .map(|c| match c {
            '+' => "plus".to_owned(),
            c if c.is_ascii_alphanumeric() || "-_.".contains(c) => c.to_string(),
            _ => "_".to_owned(),
        })
        .collect()
}

pub fn trace_file_name(method: Method, system: &str, seed: u64) -> String {
    format!("{}_{}_seed{seed}.csv", method, file_safe(system))
}

fn run_trial(exp: &PreparedExperiment, trial: usize, out: Option<&Path>) -> Result<(RunRecord, VqeTrace)> {
    let cfg = &exp.config;
    let seed = cfg.base_seed + trial as u64;
    let started = Instant::now();
    let mut rng = seeded(seed);
    let mut controller: Box<dyn ShotController> = match &exp.policy {
        Some(actor) => Box::new(PolicyController::new(actor.clone(), cfg.budget)),
        None => Box::new(FixedShots(cfg.budget)),
    };
    let trace = run_vqe(exp.problem.clone(), cfg.settings(), controller.as_mut(), &mut rng)?;
    let system = system_label(exp);
    let last = trace.last();
    let ground = exp.problem.ground_energy;
    let metric = |exact| {
        (!cfg.exact)
            .then(|| shots_to_threshold(&trace, ground, exact))
            .flatten()
    };
    let record = RunRecord {
        trial,
        seed,
        method: cfg.method,
        shots_to_threshold: metric(false),
        shots_to_threshold_exact: metric(true),
        iterations: trace.len(),
        total_shots: trace.cumulative_shots(),
        final_estimated_energy: last.map_or(f64::NAN, |r| r.estimated_energy),
        final_exact_energy: last.map_or(f64::NAN, |r| r.exact_energy),
        stopped_early: trace.len() < cfg.optimizer.max_iterations,
        wall_time_secs: started.elapsed().as_secs_f64(),
        system,
    };
    if let Some(dir) = out {
        trace.write_csv(
            &dir.join("traces")
                .join(trace_file_name(cfg.method, &record.system, seed)),
        )?;
    }
    Ok((record, trace))
}

/// Runs every trial of a checked experiment.
pub fn run_prepared(exp: &PreparedExperiment) -> Result<Campaign> {
    let out = exp.config.output_path();
    let pool = worker_pool()?;
    let results: Vec<(RunRecord, VqeTrace)> = pool.install(|| {
        (0..exp.config.trials)
            .into_par_iter()
            .map(|t| run_trial(exp, t, out.as_deref()))
            .collect::<Result<_>>()
    })?;
    let (records, traces): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let meta = &exp.problem.hamiltonian.metadata;
    let summary = CampaignSummary {
        config: exp.config.clone(),
        system: system_label(exp),
        molecule: meta.molecule.clone(),
        bond_length_angstrom: meta.bond_length_angstrom,
        ground_energy: exp.problem.ground_energy,
        n_cliques: exp.problem.n_cliques(),
        n_params: exp.problem.n_params(),
        shots: ShotSummary::from_records(&records)?,
    };
    let campaign = Campaign {
        records,
        traces,
        summary,
    };
    if let Some(dir) = out {
        write_outputs(&campaign, &dir)?;
    }
    Ok(campaign)
}

/// Validates the whole configuration, then runs the campaign.
pub fn run_campaign(config: &ExperimentConfig) -> Result<Campaign> {
    run_prepared(&config.prepare()?)
}

pub fn records_to_csv(records: &[RunRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn records_from_csv(text: &str) -> Result<Vec<RunRecord>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<std::result::Result<Vec<RunRecord>, _>>()?)
}

fn write_outputs(c: &Campaign, dir: &Path) -> Result<()> {
    write_file(&dir.join("records.csv"), records_to_csv(&c.records)?)?;
    write_file(
        &dir.join("summary.json"),
        serde_json::to_string_pretty(&c.summary)? + "\n",
    )?;
    let mut timing = String::from("trial,seed,wall_time_secs\n");
    for r in &c.records {
        timing.push_str(&format!("{},{},{:.6}\n", r.trial, r.seed, r.wall_time_secs));
    }
    write_file(&dir.join("timing.csv"), timing)
}

/// Recomputes the shot summary from a `records.csv` file.
pub fn summarize_records_file(path: &Path) -> Result<ShotSummary> {
    let records = records_from_csv(&read_to_string(path)?)?;
    if records.is_empty() {
        return Err(Error::Config(format!("{} holds no records", path.display())));
    }
    ShotSummary::from_records(&records)
}

/// `records.csv` inside an output directory, or the path itself.
pub fn records_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join("records.csv")
    } else {
        path.to_path_buf()
    }
}

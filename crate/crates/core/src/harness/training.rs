use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

use super::campaign::worker_pool;
use crate::error::Result;
use crate::measurement::Allocator;
use crate::rl::{train_policy, PolicyBundle, PolicyCheckpoint, ShotEnv, Td3Config, TrainingInfo, TrainingLog};
use crate::rng::seeded;
use crate::vqe::{Estimator, OptimizerConfig, VqeProblem, VqeSettings};

/// Everything a policy training campaign needs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSpec {
    pub hamiltonian: PathBuf,
    pub ansatz: PathBuf,
    pub budget: u64,
    pub allocator: Allocator,
    pub optimizer: OptimizerConfig,
    pub episodes: usize,
    pub seed: u64,
    pub td3: Td3Config,
}

impl Default for TrainSpec {
    /// H2 at 1.75 Angstrom, N = 3000, GD lr 0.1 for 500 iterations, 200 episodes.
    fn default() -> Self {
        TrainSpec {
            hamiltonian: PathBuf::from("data/hamiltonians/H2_1.75.toml"),
            ansatz: PathBuf::from("data/ansatz/h2.toml"),
            budget: 3000,
            allocator: Allocator::Uniform,
            optimizer: OptimizerConfig::gd(),
            episodes: 200,
            seed: 0,
            td3: Td3Config::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub seed: u64,
    pub bundle: PolicyBundle,
    pub log: TrainingLog,
    pub checkpoint: PolicyCheckpoint,
}

pub fn train(spec: &TrainSpec) -> Result<TrainOutcome> {
    let problem = Arc::new(VqeProblem::load(&spec.hamiltonian, &spec.ansatz)?);
    let settings = VqeSettings {
        optimizer: spec.optimizer,
        estimator: Estimator::Shots(spec.allocator),
    };
    let mut env = ShotEnv::new(problem.clone(), settings, spec.budget)?;
    let mut rng = seeded(spec.seed);
    let mut bundle = PolicyBundle::new(spec.td3, &mut rng)?;
    let log = train_policy(&mut env, spec.episodes, &mut bundle, &mut rng)?;
    let meta = &problem.hamiltonian.metadata;
    let info = TrainingInfo {
        molecule: meta.molecule.clone(),
        bond_length_angstrom: Some(meta.bond_length_angstrom),
        hamiltonian_source: Some(spec.hamiltonian.display().to_string()),
        budget: spec.budget,
        episodes: spec.episodes,
        seed: spec.seed,
    };
    let checkpoint = PolicyCheckpoint::from_bundle(&bundle, info);
    Ok(TrainOutcome {
        seed: spec.seed,
        bundle,
        log,
        checkpoint,
    })
}

/// Independent trainings, one per seed, on the worker pool.
pub fn train_many(spec: &TrainSpec, seeds: &[u64]) -> Result<Vec<TrainOutcome>> {
    worker_pool()?.install(|| {
        seeds
            .par_iter()
            .map(|&seed| train(&TrainSpec { seed, ..spec.clone() }))
            .collect()
    })
}

/// Writes the checkpoint to `path` and the episode log next to it.
pub fn save_outcome(outcome: &TrainOutcome, path: &Path) -> Result<PathBuf> {
    outcome.checkpoint.save(path)?;
    let log_path = path.with_extension("episodes.csv");
    outcome.log.write_csv(&log_path)?;
    Ok(log_path)
}

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::env::ShotEnv;
use super::replay::Transition;
use super::state::ols_slope;
use super::td3::{random_action, PolicyBundle};
use crate::error::{write_file, Error, Result};
use crate::rng::SimRng;

pub const HISTOGRAM_BINS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub episode: usize,
    pub total_reward: f64,
    pub steps: usize,
    pub iterations: usize,
    pub converged: bool,
    pub total_shots: u64,
    /// Counts of chosen actions in ten equal bins over `[0, 1]`.
    pub action_histogram: [u32; HISTOGRAM_BINS],
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub episodes: Vec<EpisodeLog>,
}

impl TrainingLog {
    pub fn rewards(&self) -> Vec<f64> {
        self.episodes.iter().map(|e| e.total_reward).collect()
    }

    /// OLS slope of total reward against episode index.
    pub fn reward_slope(&self) -> f64 {
        if self.episodes.len() < 2 {
            return 0.0;
        }
        ols_slope(&self.rewards())
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("episode,total_reward,steps,iterations,converged,total_shots");
        for b in 0..HISTOGRAM_BINS {
            let _ = write!(out, ",actions_{:.1}_{:.1}", b as f64 / 10.0, (b + 1) as f64 / 10.0);
        }
        out.push('\n');
        for e in &self.episodes {
            let _ = write!(
                out,
                "{},{},{},{},{},{}",
                e.episode, e.total_reward, e.steps, e.iterations, e.converged, e.total_shots
            );
            for c in e.action_histogram {
                let _ = write!(out, ",{c}");
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_file(path, self.to_csv_string())
    }
}

fn bin(a: f64) -> usize {
    ((a * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1)
}

/// Trains `bundle` over `episodes` full episodes of `env`. The first
/// `warmup_steps` environment steps take uniformly random actions and do not
/// update the networks; afterwards every step takes an exploring policy
/// action and performs one TD3 update.
pub fn train_policy(
    env: &mut ShotEnv,
    episodes: usize,
    bundle: &mut PolicyBundle,
    rng: &mut SimRng,
) -> Result<TrainingLog> {
    if episodes == 0 {
        return Err(Error::Config("training needs at least one episode".into()));
    }
    let mut log = TrainingLog::default();
    let mut total_steps = 0usize;
    for episode in 0..episodes {
        let mut state = env.reset(rng)?;
        let mut entry = EpisodeLog {
            episode,
            total_reward: 0.0,
            steps: 0,
            iterations: 0,
            converged: false,
            total_shots: 0,
            action_histogram: [0; HISTOGRAM_BINS],
        };
        while !env.is_done() {
            let warm = total_steps < bundle.config.warmup_steps;
            let action = if warm {
                random_action(rng)
            } else {
                bundle.select_action(&state, true, rng)
            };
            let out = env.step(action, rng)?;
            bundle.buffer.push(Transition {
                state,
                action,
                reward: out.reward,
                next_state: out.next_state,
                done: out.converged,
            });
            if !warm {
                bundle.train_step(rng)?;
            }
            total_steps += 1;
            state = out.next_state;
            entry.total_reward += out.reward;
            entry.steps += 1;
            entry.converged = out.converged;
            entry.action_histogram[bin(action)] += 1;
        }
        let run = env.run().expect("episode ran");
        entry.iterations = run.iteration();
        entry.total_shots = run.trace().cumulative_shots();
        log::info!(
            "episode {episode}: reward {:.3}, {} steps, {} iterations{}",
            entry.total_reward,
            entry.steps,
            entry.iterations,
            if entry.converged { ", converged" } else { "" }
        );
        log.episodes.push(entry);
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use crate::hamiltonian::Hamiltonian;
    use crate::measurement::Allocator;
    use crate::rl::td3::Td3Config;
    use crate::rng::seeded;
    use crate::simulator::{presets, AnsatzCircuit, Gate};
    use crate::vqe::{Estimator, OptimizerConfig, VqeProblem, VqeSettings};

    fn h2_env(max_iterations: usize) -> ShotEnv {
        let h = Hamiltonian::from_terms(
            2,
            &[
                (-0.666, "II"),
                (-0.0889, "IZ"),
                (0.245, "XX"),
                (0.0889, "ZI"),
                (-0.0025, "ZZ"),
            ],
        )
        .unwrap();
        let problem = Arc::new(VqeProblem::new(presets::h2(), h).unwrap());
        let settings = VqeSettings {
            optimizer: OptimizerConfig {
                max_iterations,
                ..OptimizerConfig::gd()
            },
            estimator: Estimator::Shots(Allocator::Uniform),
        };
        ShotEnv::new(problem, settings, 3000).unwrap()
    }

    #[test]
    fn warmup_leaves_actor_untouched() {
        let mut env = h2_env(40);
        let cfg = Td3Config {
            hidden: 8,
            batch_size: 2,
            warmup_steps: 1000,
            ..Td3Config::default()
        };
        let mut rng = seeded(1);
        let mut bundle = PolicyBundle::new(cfg, &mut rng).unwrap();
        let actor0 = bundle.actor.clone();
        let log = train_policy(&mut env, 3, &mut bundle, &mut rng).unwrap();
        assert_eq!(bundle.actor, actor0);
        assert_eq!(bundle.updates(), 0);
        assert_eq!(log.episodes.len(), 3);
        let stored: usize = log.episodes.iter().map(|e| e.steps).sum();
        assert_eq!(bundle.buffer.len(), stored);
        for e in &log.episodes {
            assert_eq!(e.action_histogram.iter().sum::<u32>() as usize, e.steps);
        }
    }

    #[test]
    fn immediate_convergence_episode_reward() {
        // a constant-energy system converges on its very first window
        let c = AnsatzCircuit::new("idle", 1, 1, 0, vec![Gate::rz(0, 0)]).unwrap();
        let h = Hamiltonian::from_terms(1, &[(-1.0, "Z")]).unwrap();
        let problem = Arc::new(VqeProblem::new(c, h).unwrap());
        let settings = VqeSettings {
            optimizer: OptimizerConfig::gd(),
            estimator: Estimator::Shots(Allocator::Uniform),
        };
        let mut env = ShotEnv::new(problem, settings, 1000).unwrap();
        let cfg = Td3Config {
            hidden: 8,
            ..Td3Config::default()
        };
        let mut rng = seeded(2);
        let mut bundle = PolicyBundle::new(cfg, &mut rng).unwrap();
        let log = train_policy(&mut env, 1, &mut bundle, &mut rng).unwrap();
        let e = &log.episodes[0];
        assert_eq!(e.steps, 1);
        assert!(e.converged);
        assert!(e.total_reward > 19.0 && e.total_reward <= 19.95);
        assert_eq!(e.iterations, 10);
    }

    #[test]
    fn updates_start_after_warmup() {
        let mut env = h2_env(100);
        let cfg = Td3Config {
            hidden: 8,
            batch_size: 4,
            warmup_steps: 5,
            ..Td3Config::default()
        };
        let mut rng = seeded(3);
        let mut bundle = PolicyBundle::new(cfg, &mut rng).unwrap();
        let log = train_policy(&mut env, 2, &mut bundle, &mut rng).unwrap();
        let steps: usize = log.episodes.iter().map(|e| e.steps).sum();
        assert_eq!(bundle.updates() as usize, steps - 5);
        assert!(log.to_csv_string().lines().count() == 3);
    }
}

use std::sync::Arc;

use super::state::{RlState, WindowTracker, WINDOW};
use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::vqe::{Estimator, VqeProblem, VqeRun, VqeSettings};

/// Smallest fraction of the budget an action may request.
pub const A_MIN: f64 = 0.05;
pub const CONVERGENCE_BONUS: f64 = 20.0;

pub fn clamp_action(a: f64) -> f64 {
    a.clamp(A_MIN, 1.0)
}

/// Per-evaluation shots `round(N * a)` for a clamped action.
pub fn shots_for_action(budget: u64, a: f64) -> u64 {
    (budget as f64 * clamp_action(a)).round() as u64
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    pub next_state: RlState,
    pub done: bool,
    /// Ended by the convergence rule rather than by the iteration cap.
    pub converged: bool,
    pub shots_per_eval: u64,
}

/// One VQE episode seen as an MDP: each action fixes `N_t` for the next
/// `WINDOW` iterations.
#[derive(Debug, Clone)]
pub struct ShotEnv {
    problem: Arc<VqeProblem>,
    settings: VqeSettings,
    budget: u64,
    run: Option<VqeRun>,
    tracker: WindowTracker,
    state: RlState,
    done: bool,
}

impl ShotEnv {
    pub fn new(problem: Arc<VqeProblem>, settings: VqeSettings, budget: u64) -> Result<Self> {
        if settings.estimator == Estimator::Exact {
            return Err(Error::Config("the shot environment needs a sampling estimator".into()));
        }
        let least = shots_for_action(budget, A_MIN);
        if least < problem.n_cliques() as u64 {
            return Err(Error::Config(format!(
                "budget {budget}: the smallest action gives {least} shots for {} cliques",
                problem.n_cliques()
            )));
        }
        settings.optimizer.validate()?;
        Ok(ShotEnv {
            problem,
            settings,
            budget,
            run: None,
            tracker: WindowTracker::default(),
            state: RlState::INITIAL,
            done: true,
        })
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn problem(&self) -> &Arc<VqeProblem> {
        &self.problem
    }

    pub fn run(&self) -> Option<&VqeRun> {
        self.run.as_ref()
    }

    pub fn state(&self) -> RlState {
        self.state
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Starts a fresh VQE run from random initial parameters.
    pub fn reset(&mut self, rng: &mut SimRng) -> Result<RlState> {
        self.run = Some(VqeRun::with_random_init(self.problem.clone(), self.settings, rng)?);
        self.tracker = WindowTracker::default();
        self.state = RlState::INITIAL;
        self.done = false;
        Ok(self.state)
    }

    pub fn step(&mut self, action: f64, rng: &mut SimRng) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::Contract("step on a finished episode; call reset".into()));
        }
        let run = self.run.as_mut().expect("reset before step");
        let a = clamp_action(action);
        let shots = shots_for_action(self.budget, a);
        for _ in 0..WINDOW {
            if run.is_finished() {
                break;
            }
            run.step(shots, rng)?;
        }
        if let Some(window) = run.trace().window(WINDOW) {
            self.state = self.tracker.observe(&window)?;
        }
        let converged = self.state.is_converged();
        self.done = converged || run.is_finished();
        Ok(StepOutcome {
            reward: -a + if converged { CONVERGENCE_BONUS } else { 0.0 },
            next_state: self.state,
            done: self.done,
            converged,
            shots_per_eval: shots,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::Hamiltonian;
    use crate::measurement::Allocator;
    use crate::rng::seeded;
    use crate::simulator::presets;
    use crate::vqe::OptimizerConfig;
    use proptest::prelude::*;

    fn env(max_iterations: usize, budget: u64) -> ShotEnv {
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
        ShotEnv::new(problem, settings, budget).unwrap()
    }

    #[test]
    fn action_sets_shots_for_ten_iterations() {
        let mut e = env(500, 3000);
        let mut rng = seeded(1);
        e.reset(&mut rng).unwrap();
        let out = e.step(0.5, &mut rng).unwrap();
        assert_eq!(out.shots_per_eval, 1500);
        let trace = e.run().unwrap().trace();
        assert_eq!(trace.len(), 10);
        assert!(trace.records().iter().all(|r| r.shots_this_iter == 5 * 1500));
        assert!(!out.done);
        assert_eq!(out.reward, -0.5);
    }

    #[test]
    fn timeout_gives_no_bonus() {
        let mut e = env(20, 3000);
        let mut rng = seeded(2);
        e.reset(&mut rng).unwrap();
        let mut last = None;
        while !e.is_done() {
            last = Some(e.step(0.3, &mut rng).unwrap());
        }
        let last = last.unwrap();
        assert_eq!(e.run().unwrap().iteration(), 20);
        if !last.converged {
            assert_eq!(last.reward, -0.3);
        }
        assert!(e.step(0.3, &mut rng).is_err());
    }

    #[test]
    fn small_budget_is_rejected() {
        let e = env(10, 3000);
        assert!(ShotEnv::new(e.problem.clone(), e.settings, 20).is_err());
    }

    #[test]
    fn action_clamping() {
        assert_eq!(shots_for_action(3000, 0.0), 150);
        assert_eq!(shots_for_action(3000, 7.0), 3000);
        assert_eq!(clamp_action(0.99 + 0.5), 1.0);
        assert_eq!(clamp_action(A_MIN - 0.5), 0.05);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn rewards_and_shots_stay_in_bounds(
            actions in prop::collection::vec(-0.5f64..1.5, 1..8),
            seed in 0u64..1000,
        ) {
            let mut e = env(60, 3000);
            let mut rng = seeded(seed);
            e.reset(&mut rng).unwrap();
            for a in actions {
                if e.is_done() {
                    break;
                }
                let out = e.step(a, &mut rng).unwrap();
                prop_assert!((150..=3000).contains(&out.shots_per_eval));
                if out.converged {
                    prop_assert!((19.0..=19.95).contains(&out.reward));
                } else {
                    prop_assert!((-1.0..=-0.05).contains(&out.reward));
                }
            }
        }
    }
}

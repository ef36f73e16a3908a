use super::env::shots_for_action;
use super::nn::Mlp;
use super::state::{RlState, WindowTracker, WINDOW};
use crate::error::Result;
use crate::rng::SimRng;
use crate::vqe::{ShotController, VqeRun};

/// Drives a VQE run with a frozen actor: a new action every `WINDOW`
/// iterations, and a stop once the convergence rule fires.
#[derive(Debug, Clone)]
pub struct PolicyController {
    actor: Mlp,
    budget: u64,
    tracker: WindowTracker,
    state: RlState,
    shots: u64,
    actions: Vec<f64>,
}

impl PolicyController {
    pub fn new(actor: Mlp, budget: u64) -> Self {
        PolicyController {
            actor,
            budget,
            tracker: WindowTracker::default(),
            state: RlState::INITIAL,
            shots: 0,
            actions: Vec::new(),
        }
    }

    /// Actions taken so far, one per window.
    pub fn actions(&self) -> &[f64] {
        &self.actions
    }

    pub fn state(&self) -> RlState {
        self.state
    }
}

impl ShotController for PolicyController {
    fn next_shots(&mut self, run: &VqeRun, _rng: &mut SimRng) -> Result<Option<u64>> {
        let t = run.iteration();
        if t.is_multiple_of(WINDOW) {
            if let Some(window) = run.trace().window(WINDOW).filter(|_| t > 0) {
                self.state = self.tracker.observe(&window)?;
                if self.state.is_converged() {
                    return Ok(None);
                }
            }
            let a = self.actor.forward(&self.state.features())[0];
            self.actions.push(a);
            self.shots = shots_for_action(self.budget, a);
        }
        Ok(Some(self.shots))
    }
}

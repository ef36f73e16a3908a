//! Shot allocation as a Markov decision process, and the TD3 agent that
//! learns it.
//!
//! Every `WINDOW` VQE iterations the agent sees the slope of the latest
//! energy window and whether it set a new minimum, then picks the fraction
//! `a` of the budget to spend per evaluation for the next window. Each step
//! costs `a`; converging earns a bonus.

mod controller;
mod env;
mod nn;
mod replay;
mod state;
mod td3;
mod train;

pub use controller::PolicyController;
pub use env::{clamp_action, shots_for_action, ShotEnv, StepOutcome, A_MIN, CONVERGENCE_BONUS};
pub use nn::{ForwardCache, Mlp, OutputActivation};
pub use replay::{ReplayBuffer, Transition};
pub use state::{compute_state, ols_slope, RlState, WindowTracker, CONVERGENCE_X1, WINDOW, X1_CLAMP};
pub use td3::{
    actor_loss, actor_loss_grad, critic_loss, critic_loss_grad, random_action, PolicyBundle, PolicyCheckpoint,
    Td3Config, TrainingInfo, UpdateStats, ACTOR_OUTPUT,
};
pub use train::{train_policy, EpisodeLog, TrainingLog, HISTOGRAM_BINS};

//! Twin-critic delayed deterministic policy gradient.

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::env::{clamp_action, A_MIN};
use super::nn::{Mlp, OutputActivation};
use super::replay::{ReplayBuffer, Transition};
use super::state::RlState;
use crate::error::{read_to_string, write_file, Error, Result};
use crate::optim::{Adam, AdamConfig};
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Td3Config {
    /// Discount factor.
    pub discount: f64,
    /// Target networks keep this fraction of their old parameters per step.
    pub polyak: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub explore_noise: f64,
    pub target_noise: f64,
    pub noise_clip: f64,
    pub policy_delay: u64,
    pub warmup_steps: usize,
    pub hidden: usize,
}

impl Default for Td3Config {
    fn default() -> Self {
        Td3Config {
            discount: 0.99,
            polyak: 0.995,
            batch_size: 64,
            buffer_capacity: 50_000,
            actor_lr: 1e-3,
            critic_lr: 1e-3,
            explore_noise: 0.1,
            target_noise: 0.2,
            noise_clip: 0.5,
            policy_delay: 2,
            warmup_steps: 200,
            hidden: 64,
        }
    }
}

impl Td3Config {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} {v} must lie in [0, 1]")))
            }
        };
        unit("discount", self.discount)?;
        unit("polyak", self.polyak)?;
        if self.batch_size == 0 || self.buffer_capacity == 0 || self.policy_delay == 0 || self.hidden == 0 {
            return Err(Error::Config(
                "batch, buffer, policy delay and hidden width must be positive".into(),
            ));
        }
        for (name, v) in [
            ("actor_lr", self.actor_lr),
            ("critic_lr", self.critic_lr),
            ("explore_noise", self.explore_noise),
            ("target_noise", self.target_noise),
            ("noise_clip", self.noise_clip),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "{name} {v} must be a finite non-negative number"
                )));
            }
        }
        Ok(())
    }
}

fn critic_input(state: &RlState, action: f64) -> [f64; 3] {
    let [f1, f2] = state.features();
    [f1, f2, action]
}

pub const ACTOR_OUTPUT: OutputActivation = OutputActivation::ScaledSigmoid { lo: A_MIN, hi: 1.0 };

/// Live and target actor/critics, their optimizers and the replay buffer.
#[derive(Debug, Clone)]
pub struct PolicyBundle {
    pub config: Td3Config,
    pub actor: Mlp,
    pub critic1: Mlp,
    pub critic2: Mlp,
    pub actor_target: Mlp,
    pub critic1_target: Mlp,
    pub critic2_target: Mlp,
    actor_opt: Adam,
    critic1_opt: Adam,
    critic2_opt: Adam,
    pub buffer: ReplayBuffer,
    updates: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub critic1_loss: f64,
    pub critic2_loss: f64,
    /// Present on the delayed steps that also moved the actor.
    pub actor_loss: Option<f64>,
}

impl PolicyBundle {
    pub fn new(config: Td3Config, rng: &mut SimRng) -> Result<Self> {
        config.validate()?;
        let h = config.hidden;
        let actor = Mlp::new(&[2, h, h, 1], ACTOR_OUTPUT, rng);
        let critic1 = Mlp::new(&[3, h, h, 1], OutputActivation::Identity, rng);
        let critic2 = Mlp::new(&[3, h, h, 1], OutputActivation::Identity, rng);
        Ok(Self::from_networks(config, actor, critic1, critic2))
    }

    fn from_networks(config: Td3Config, actor: Mlp, critic1: Mlp, critic2: Mlp) -> Self {
        let adam = AdamConfig::default();
        PolicyBundle {
            actor_opt: Adam::new(actor.n_params(), adam),
            critic1_opt: Adam::new(critic1.n_params(), adam),
            critic2_opt: Adam::new(critic2.n_params(), adam),
            actor_target: actor.clone(),
            critic1_target: critic1.clone(),
            critic2_target: critic2.clone(),
            buffer: ReplayBuffer::new(config.buffer_capacity),
            updates: 0,
            config,
            actor,
            critic1,
            critic2,
        }
    }

    /// Number of [`td3_update`](Self::td3_update) calls that did work.
    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// Deterministic policy output in `[A_MIN, 1]`.
    pub fn act(&self, state: &RlState) -> f64 {
        self.actor.forward(&state.features())[0]
    }

    pub fn select_action(&self, state: &RlState, explore: bool, rng: &mut SimRng) -> f64 {
        let a = self.act(state);
        if explore && self.config.explore_noise > 0.0 {
            let noise = Normal::new(0.0, self.config.explore_noise).expect("positive std");
            perturb(a, noise.sample(rng))
        } else {
            a
        }
    }

    /// Bootstrapped regression targets for `batch`.
    pub fn critic_targets(&self, batch: &[Transition], rng: &mut SimRng) -> Vec<f64> {
        let c = self.config;
        let noise = (c.target_noise > 0.0).then(|| Normal::new(0.0, c.target_noise).expect("positive std"));
        batch
            .iter()
            .map(|t| {
                let eps = noise.map_or(0.0, |n| n.sample(rng)).clamp(-c.noise_clip, c.noise_clip);
                if t.done {
                    return t.reward;
                }
                let a_next = clamp_action(self.actor_target.forward(&t.next_state.features())[0] + eps);
                let x = critic_input(&t.next_state, a_next);
                let q = self.critic1_target.forward(&x)[0].min(self.critic2_target.forward(&x)[0]);
                t.reward + c.discount * q
            })
            .collect()
    }

    /// One TD3 step on `batch`. An empty batch is a logged no-op.
    pub fn td3_update(&mut self, batch: &[Transition], rng: &mut SimRng) -> Result<Option<UpdateStats>> {
        if batch.is_empty() {
            log::warn!("td3 update skipped: empty batch");
            return Ok(None);
        }
        let targets = self.critic_targets(batch, rng);
        let (l1, g1) = critic_loss_grad(&self.critic1, batch, &targets);
        let (l2, g2) = critic_loss_grad(&self.critic2, batch, &targets);
        check_finite(&g1, "critic gradient")?;
        check_finite(&g2, "critic gradient")?;
        self.critic1_opt
            .step(self.critic1.params_mut(), &g1, self.config.critic_lr);
        self.critic2_opt
            .step(self.critic2.params_mut(), &g2, self.config.critic_lr);
        self.updates += 1;

        let mut actor_loss = None;
        if self.updates.is_multiple_of(self.config.policy_delay) {
            let (la, ga) = actor_loss_grad(&self.actor, &self.critic1, batch);
            check_finite(&ga, "actor gradient")?;
            self.actor_opt.step(self.actor.params_mut(), &ga, self.config.actor_lr);
            self.polyak_step();
            actor_loss = Some(la);
        }
        Ok(Some(UpdateStats {
            critic1_loss: l1,
            critic2_loss: l2,
            actor_loss,
        }))
    }

    /// Samples a batch from the buffer and updates, once the buffer holds
    /// at least one batch.
    pub fn train_step(&mut self, rng: &mut SimRng) -> Result<Option<UpdateStats>> {
        if self.buffer.len() < self.config.batch_size {
            return Ok(None);
        }
        let batch = self.buffer.sample(self.config.batch_size, rng);
        self.td3_update(&batch, rng)
    }

    pub fn polyak_step(&mut self) {
        let rho = self.config.polyak;
        self.actor.polyak_into(&mut self.actor_target, rho);
        self.critic1.polyak_into(&mut self.critic1_target, rho);
        self.critic2.polyak_into(&mut self.critic2_target, rho);
    }
}

fn perturb(a: f64, noise: f64) -> f64 {
    clamp_action(a + noise)
}

fn check_finite(g: &[f64], what: &str) -> Result<()> {
    match g.iter().find(|v| !v.is_finite()) {
        Some(v) => Err(Error::NonFinite(format!("{what} component {v}"))),
        None => Ok(()),
    }
}

/// Mean squared error of `critic(x, a)` against `targets`.
pub fn critic_loss(critic: &Mlp, batch: &[Transition], targets: &[f64]) -> f64 {
    let n = batch.len() as f64;
    batch
        .iter()
        .zip(targets)
        .map(|(t, y)| (critic.forward(&critic_input(&t.state, t.action))[0] - y).powi(2))
        .sum::<f64>()
        / n
}

pub fn critic_loss_grad(critic: &Mlp, batch: &[Transition], targets: &[f64]) -> (f64, Vec<f64>) {
    let n = batch.len() as f64;
    let mut grad = vec![0.0; critic.n_params()];
    let mut loss = 0.0;
    for (t, y) in batch.iter().zip(targets) {
        let (cache, out) = critic.forward_cached(&critic_input(&t.state, t.action));
        let err = out[0] - y;
        loss += err * err / n;
        critic.backward(&cache, &[2.0 * err / n], &mut grad);
    }
    (loss, grad)
}

/// Negated mean of `Q1(x, actor(x))`; minimizing it ascends the critic.
pub fn actor_loss(actor: &Mlp, critic: &Mlp, batch: &[Transition]) -> f64 {
    let n = batch.len() as f64;
    -batch
        .iter()
        .map(|t| critic.forward(&critic_input(&t.state, actor.forward(&t.state.features())[0]))[0])
        .sum::<f64>()
        / n
}

pub fn actor_loss_grad(actor: &Mlp, critic: &Mlp, batch: &[Transition]) -> (f64, Vec<f64>) {
    let n = batch.len() as f64;
    let mut grad = vec![0.0; actor.n_params()];
    let mut critic_scratch = vec![0.0; critic.n_params()];
    let mut loss = 0.0;
    for t in batch {
        let (a_cache, a_out) = actor.forward_cached(&t.state.features());
        let (c_cache, q) = critic.forward_cached(&critic_input(&t.state, a_out[0]));
        loss -= q[0] / n;
        let d_input = critic.backward(&c_cache, &[-1.0 / n], &mut critic_scratch);
        actor.backward(&a_cache, &[d_input[2]], &mut grad);
    }
    (loss, grad)
}

/// On-disk policy: every network, the hyperparameters and a description of
/// the system it was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyCheckpoint {
    pub format: String,
    pub version: u32,
    pub config: Td3Config,
    pub training: TrainingInfo,
    pub actor: Mlp,
    pub critic1: Mlp,
    pub critic2: Mlp,
    pub actor_target: Mlp,
    pub critic1_target: Mlp,
    pub critic2_target: Mlp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingInfo {
    pub molecule: String,
    pub bond_length_angstrom: Option<f64>,
    pub hamiltonian_source: Option<String>,
    pub budget: u64,
    pub episodes: usize,
    pub seed: u64,
}

const CHECKPOINT_FORMAT: &str = "shotwise-policy";
const CHECKPOINT_VERSION: u32 = 1;

impl PolicyCheckpoint {
    pub fn from_bundle(bundle: &PolicyBundle, training: TrainingInfo) -> Self {
        PolicyCheckpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            config: bundle.config,
            training,
            actor: bundle.actor.clone(),
            critic1: bundle.critic1.clone(),
            critic2: bundle.critic2.clone(),
            actor_target: bundle.actor_target.clone(),
            critic1_target: bundle.critic1_target.clone(),
            critic2_target: bundle.critic2_target.clone(),
        }
    }

    /// Rebuilds a bundle with fresh optimizer state and an empty buffer.
    pub fn into_bundle(self) -> Result<PolicyBundle> {
        self.validate()?;
        let mut bundle = PolicyBundle::from_networks(self.config, self.actor, self.critic1, self.critic2);
        bundle.actor_target = self.actor_target;
        bundle.critic1_target = self.critic1_target;
        bundle.critic2_target = self.critic2_target;
        Ok(bundle)
    }

    fn validate(&self) -> Result<()> {
        if self.format != CHECKPOINT_FORMAT || self.version != CHECKPOINT_VERSION {
            return Err(Error::Config(format!(
                "unsupported checkpoint {} v{}",
                self.format, self.version
            )));
        }
        self.config.validate()?;
        let h = self.config.hidden;
        let nets = [
            (&self.actor, [2, h, h, 1]),
            (&self.actor_target, [2, h, h, 1]),
            (&self.critic1, [3, h, h, 1]),
            (&self.critic2, [3, h, h, 1]),
            (&self.critic1_target, [3, h, h, 1]),
            (&self.critic2_target, [3, h, h, 1]),
        ];
        for (net, sizes) in nets {
            // round-trip through from_params to recheck length and finiteness
            Mlp::from_params(&sizes, net.output_activation(), net.params().to_vec())?;
            if net.sizes() != sizes {
                return Err(Error::Config(format!(
                    "network shape {:?}, expected {sizes:?}",
                    net.sizes()
                )));
            }
        }
        if self.actor.output_activation() != ACTOR_OUTPUT {
            return Err(Error::Config("actor output must map onto the action range".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: PolicyCheckpoint = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, self.to_json()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read_to_string(path)?)
    }
}

/// Uniform draw from the action range, used during warmup.
pub fn random_action(rng: &mut SimRng) -> f64 {
    rng.random_range(A_MIN..=1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn small_config() -> Td3Config {
        Td3Config {
            hidden: 8,
            batch_size: 4,
            ..Td3Config::default()
        }
    }

    fn transition(x1: f64, x2: bool, a: f64, r: f64, done: bool) -> Transition {
        Transition {
            state: RlState { x1, x2 },
            action: a,
            reward: r,
            next_state: RlState { x1: x1 + 0.5, x2: !x2 },
            done,
        }
    }

    fn batch() -> Vec<Transition> {
        vec![
            transition(0.0, true, 0.3, -0.3, false),
            transition(2.1, false, 0.9, -0.9, false),
            transition(4.0, true, 0.3, 19.7, true),
            transition(-3.0, false, 0.05, -0.05, false),
            transition(8.5, true, 0.6, -0.6, false),
        ]
    }

    #[test]
    fn terminal_target_is_reward() {
        let b = PolicyBundle::new(small_config(), &mut seeded(0)).unwrap();
        let y = b.critic_targets(&[transition(4.0, true, 0.3, 19.7, true)], &mut seeded(1));
        assert_eq!(y, [19.7]);
    }

    #[test]
    fn myopic_target_is_reward() {
        let cfg = Td3Config {
            discount: 0.0,
            ..small_config()
        };
        let b = PolicyBundle::new(cfg, &mut seeded(0)).unwrap();
        let batch = batch();
        let y = b.critic_targets(&batch, &mut seeded(1));
        for (t, y) in batch.iter().zip(y) {
            assert_eq!(y, t.reward);
        }
    }

    #[test]
    fn select_action_determinism_and_clamps() {
        let b = PolicyBundle::new(small_config(), &mut seeded(0)).unwrap();
        let s = RlState { x1: 1.3, x2: false };
        let mut rng = seeded(5);
        assert_eq!(
            b.select_action(&s, false, &mut rng),
            b.select_action(&s, false, &mut rng)
        );
        for _ in 0..200 {
            let a = b.select_action(&s, true, &mut rng);
            assert!((A_MIN..=1.0).contains(&a));
        }
        assert_eq!(perturb(0.99, 0.5), 1.0);
        assert_eq!(perturb(A_MIN, -0.5), 0.05);
    }

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let scale = a
            .iter()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
            .max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
        diff / scale
    }

    fn fd(net: &Mlp, f: impl Fn(&Mlp) -> f64) -> Vec<f64> {
        let h = 1e-6;
        let mut probe = net.clone();
        (0..net.n_params())
            .map(|i| {
                let orig = probe.params()[i];
                probe.params_mut()[i] = orig + h;
                let up = f(&probe);
                probe.params_mut()[i] = orig - h;
                let down = f(&probe);
                probe.params_mut()[i] = orig;
                (up - down) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn loss_gradients_match_finite_differences() {
        let b = PolicyBundle::new(small_config(), &mut seeded(3)).unwrap();
        let batch = batch();
        let y = b.critic_targets(&batch, &mut seeded(4));
        for critic in [&b.critic1, &b.critic2] {
            let (loss, g) = critic_loss_grad(critic, &batch, &y);
            assert!((loss - critic_loss(critic, &batch, &y)).abs() < 1e-12);
            let num = fd(critic, |c| critic_loss(c, &batch, &y));
            assert!(rel_err(&g, &num) < 1e-5);
        }
        let (loss, g) = actor_loss_grad(&b.actor, &b.critic1, &batch);
        assert!((loss - actor_loss(&b.actor, &b.critic1, &batch)).abs() < 1e-12);
        let num = fd(&b.actor, |a| actor_loss(a, &b.critic1, &batch));
        assert!(rel_err(&g, &num) < 1e-5);
    }

    #[test]
    fn delayed_actor_and_polyak() {
        let mut b = PolicyBundle::new(small_config(), &mut seeded(3)).unwrap();
        let actor0 = b.actor.clone();
        let target0 = b.critic1_target.clone();
        let mut rng = seeded(9);
        let s1 = b.td3_update(&batch(), &mut rng).unwrap().unwrap();
        assert!(s1.actor_loss.is_none());
        assert_eq!(b.actor, actor0);
        assert_eq!(b.critic1_target, target0);
        let s2 = b.td3_update(&batch(), &mut rng).unwrap().unwrap();
        assert!(s2.actor_loss.is_some());
        assert_ne!(b.actor, actor0);
        assert_ne!(b.critic1_target, target0);
        assert_eq!(b.td3_update(&[], &mut rng).unwrap(), None);
        assert_eq!(b.updates(), 2);
    }

    #[test]
    fn target_gap_shrinks_geometrically() {
        let mut b = PolicyBundle::new(small_config(), &mut seeded(3)).unwrap();
        for p in b.actor_target.params_mut() {
            *p += 1.0;
        }
        for _ in 0..7 {
            b.polyak_step();
        }
        let expected = 0.995f64.powi(7);
        for (t, l) in b.actor_target.params().iter().zip(b.actor.params()) {
            assert!((t - l - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let b = PolicyBundle::new(small_config(), &mut seeded(3)).unwrap();
        let info = TrainingInfo {
            molecule: "H2".into(),
            bond_length_angstrom: Some(1.75),
            hamiltonian_source: None,
            budget: 3000,
            episodes: 0,
            seed: 3,
        };
        let ck = PolicyCheckpoint::from_bundle(&b, info);
        let text = ck.to_json().unwrap();
        let back = PolicyCheckpoint::from_json(&text).unwrap();
        assert_eq!(back, ck);
        let b2 = back.into_bundle().unwrap();
        assert_eq!(b2.actor, b.actor);
        let s = RlState { x1: 2.2, x2: true };
        assert_eq!(b2.act(&s), b.act(&s));

        let mut bad = ck.clone();
        bad.version = 99;
        assert!(PolicyCheckpoint::from_json(&bad.to_json().unwrap()).is_err());
    }
}

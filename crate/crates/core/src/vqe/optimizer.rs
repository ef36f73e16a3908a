use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{cosine_decay, Adam, AdamConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Gd,
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    #[serde(default)]
    pub cosine_decay: bool,
    pub max_iterations: usize,
    #[serde(default)]
    pub adam: AdamConfig,
}

impl OptimizerConfig {
    /// Plain gradient descent, lr 0.1, 500 iterations.
    pub fn gd() -> Self {
        OptimizerConfig {
            kind: OptimizerKind::Gd,
            learning_rate: 0.1,
            cosine_decay: false,
            max_iterations: 500,
            adam: AdamConfig::default(),
        }
    }

    /// Adam, lr 0.1 with cosine decay, 500 iterations.
    pub fn adam_cosine() -> Self {
        OptimizerConfig {
            kind: OptimizerKind::Adam,
            cosine_decay: true,
            ..Self::gd()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        Ok(())
    }

    /// Step size at 0-based iteration `t`.
    pub fn effective_lr(&self, t: usize) -> f64 {
        if self.cosine_decay {
            cosine_decay(self.learning_rate, t, self.max_iterations)
        } else {
            self.learning_rate
        }
    }
}

/// Optimizer internal state (Adam moments; nothing for GD).
#[derive(Debug, Clone, PartialEq)]
pub enum OptimizerState {
    Gd,
    Adam(Adam),
}

impl OptimizerState {
    pub fn new(config: &OptimizerConfig, n_params: usize) -> Self {
        match config.kind {
            OptimizerKind::Gd => OptimizerState::Gd,
            OptimizerKind::Adam => OptimizerState::Adam(Adam::new(n_params, config.adam)),
        }
    }
}

/// Updates `params` in place from `gradient` at iteration `t`.
pub fn optimizer_step(
    config: &OptimizerConfig,
    state: &mut OptimizerState,
    params: &mut [f64],
    gradient: &[f64],
    t: usize,
) -> Result<()> {
    if gradient.len() != params.len() {
        return Err(Error::DimensionMismatch {
            expected: params.len(),
            actual: gradient.len(),
        });
    }
    if let Some(g) = gradient.iter().find(|g| !g.is_finite()) {
        return Err(Error::NonFinite(format!("gradient component {g} at iteration {t}")));
    }
    let lr = config.effective_lr(t);
    match state {
        OptimizerState::Gd => {
            for (p, g) in params.iter_mut().zip(gradient) {
                *p -= lr * g;
            }
        }
        OptimizerState::Adam(adam) => adam.step(params, gradient, lr),
    }
    Ok(())
}

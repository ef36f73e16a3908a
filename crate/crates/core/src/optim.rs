//! First-order update rules shared by the VQE loop and the TD3 networks.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam moment estimates for a flat parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub config: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    steps: u64,
}

impl Adam {
    pub fn new(n: usize, config: AdamConfig) -> Self {
        Adam {
            config,
            m: vec![0.0; n],
            v: vec![0.0; n],
            steps: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Descends along `grad` with step size `lr`, in place.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        debug_assert_eq!(params.len(), grad.len());
        debug_assert_eq!(params.len(), self.m.len());
        let AdamConfig { beta1, beta2, epsilon } = self.config;
        self.steps += 1;
        let bc1 = 1.0 - beta1.powi(self.steps as i32);
        let bc2 = 1.0 - beta2.powi(self.steps as i32);
        for i in 0..params.len() {
            self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * grad[i];
            self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + epsilon);
        }
    }
}

/// Cosine decay from `lr` at `t = 0` to zero at `t = total`.
pub fn cosine_decay(lr: f64, t: usize, total: usize) -> f64 {
    let frac = (t as f64 / total.max(1) as f64).min(1.0);
    lr * 0.5 * (1.0 + (std::f64::consts::PI * frac).cos())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_adam_step_is_lr_times_sign() {
        let mut adam = Adam::new(4, AdamConfig::default());
        let mut p = vec![0.0; 4];
        adam.step(&mut p, &[3.0, -0.02, 1e-3, -700.0], 0.1);
        for (x, s) in p.iter().zip([-1.0, 1.0, -1.0, 1.0]) {
            assert!((x - 0.1 * s).abs() < 1e-6, "{x}");
        }
    }

    #[test]
    fn cosine_endpoints() {
        assert_eq!(cosine_decay(0.1, 0, 500), 0.1);
        assert!(cosine_decay(0.1, 500, 500).abs() < 1e-18);
        assert!((cosine_decay(0.1, 250, 500) - 0.05).abs() < 1e-15);
        assert!(cosine_decay(0.1, 499, 500) > 0.0);
    }
}

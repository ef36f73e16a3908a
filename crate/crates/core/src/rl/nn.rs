//! Small fully connected networks with hand-written backprop.
//!
//! Parameters live in one flat vector so that optimizers, polyak averaging
//! and finite-difference checks all work on plain slices. Layer `l` stores
//! its weights row-major (`out x in`) followed by its biases.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutputActivation {
    Identity,
    /// `lo + (hi - lo) * sigmoid(z)`.
    ScaledSigmoid {
        lo: f64,
        hi: f64,
    },
}

impl OutputActivation {
    fn apply(self, z: f64) -> f64 {
        match self {
            OutputActivation::Identity => z,
            OutputActivation::ScaledSigmoid { lo, hi } => lo + (hi - lo) * sigmoid(z),
        }
    }

    fn derivative(self, z: f64) -> f64 {
        match self {
            OutputActivation::Identity => 1.0,
            OutputActivation::ScaledSigmoid { lo, hi } => {
                let s = sigmoid(z);
                (hi - lo) * s * (1.0 - s)
            }
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Tanh hidden layers, configurable output squashing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    output: OutputActivation,
    params: Vec<f64>,
}

/// Intermediate values from [`Mlp::forward_cached`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Layer inputs: `acts[0]` is the network input, `acts[l]` the output of
    /// hidden layer `l`.
    acts: Vec<Vec<f64>>,
    /// Pre-activation of the final layer.
    z_out: Vec<f64>,
}

impl Mlp {
    /// Weights and biases drawn from `U[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], output: OutputActivation, rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "a network needs input and output sizes");
        let mut params = Vec::with_capacity(Self::count(sizes));
        for w in sizes.windows(2) {
            let bound = 1.0 / (w[0] as f64).sqrt();
            for _ in 0..(w[0] + 1) * w[1] {
                params.push(rng.random_range(-bound..bound));
            }
        }
        Mlp {
            sizes: sizes.to_vec(),
            output,
            params,
        }
    }

    pub fn from_params(sizes: &[usize], output: OutputActivation, params: Vec<f64>) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Contract(format!("invalid layer sizes {sizes:?}")));
        }
        if params.len() != Self::count(sizes) {
            return Err(Error::DimensionMismatch {
                expected: Self::count(sizes),
                actual: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("network parameter".into()));
        }
        Ok(Mlp {
            sizes: sizes.to_vec(),
            output,
            params,
        })
    }

    fn count(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn output_activation(&self) -> OutputActivation {
        self.output
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn n_inputs(&self) -> usize {
        self.sizes[0]
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.forward_cached(x).1
    }

    pub fn forward_cached(&self, x: &[f64]) -> (ForwardCache, Vec<f64>) {
        debug_assert_eq!(x.len(), self.sizes[0]);
        let n_layers = self.sizes.len() - 1;
        let mut acts = Vec::with_capacity(n_layers);
        acts.push(x.to_vec());
        let mut offset = 0;
        let mut z_out = Vec::new();
        for l in 0..n_layers {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let w = &self.params[offset..offset + n_in * n_out];
            let b = &self.params[offset + n_in * n_out..offset + (n_in + 1) * n_out];
            offset += (n_in + 1) * n_out;
            let input = &acts[l];
            let z: Vec<f64> = (0..n_out)
                .map(|j| {
                    b[j] + w[j * n_in..(j + 1) * n_in]
                        .iter()
                        .zip(input)
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
                })
                .collect();
            if l + 1 < n_layers {
                acts.push(z.iter().map(|v| v.tanh()).collect());
            } else {
                z_out = z;
            }
        }
        let out = z_out.iter().map(|&z| self.output.apply(z)).collect();
        (ForwardCache { acts, z_out }, out)
    }

    /// Backpropagates `d_out` (gradient of a scalar w.r.t. the outputs).
    /// Adds the parameter gradient into `param_grad` and returns the input
    /// gradient.
    pub fn backward(&self, cache: &ForwardCache, d_out: &[f64], param_grad: &mut [f64]) -> Vec<f64> {
        debug_assert_eq!(param_grad.len(), self.params.len());
        let n_layers = self.sizes.len() - 1;
        let mut delta: Vec<f64> = d_out
            .iter()
            .zip(&cache.z_out)
            .map(|(d, &z)| d * self.output.derivative(z))
            .collect();
        let mut offset = self.params.len();
        for l in (0..n_layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            offset -= (n_in + 1) * n_out;
            let input = &cache.acts[l];
            let w = &self.params[offset..offset + n_in * n_out];
            {
                let (gw, gb) = param_grad[offset..offset + (n_in + 1) * n_out].split_at_mut(n_in * n_out);
                for j in 0..n_out {
                    gb[j] += delta[j];
                    for (g, a) in gw[j * n_in..(j + 1) * n_in].iter_mut().zip(input) {
                        *g += delta[j] * a;
                    }
                }
            }
            let mut d_in = vec![0.0; n_in];
            for j in 0..n_out {
                for (d, wv) in d_in.iter_mut().zip(&w[j * n_in..(j + 1) * n_in]) {
                    *d += delta[j] * wv;
                }
            }
            if l > 0 {
                // input to this layer was tanh of the previous pre-activation
                for (d, a) in d_in.iter_mut().zip(input) {
                    *d *= 1.0 - a * a;
                }
            }
            delta = d_in;
        }
        delta
    }

    /// `target <- rho * target + (1 - rho) * self`.
    pub fn polyak_into(&self, target: &mut Mlp, rho: f64) {
        debug_assert_eq!(target.params.len(), self.params.len());
        for (t, p) in target.params.iter_mut().zip(&self.params) {
            *t = rho * *t + (1.0 - rho) * p;
        }
    }
}

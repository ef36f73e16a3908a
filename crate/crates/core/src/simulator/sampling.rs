//! Shot-noise model: basis-rotated bitstring sampling per clique.
//!
//! Drawing `n` independent bitstrings from `|amp|^2` and keeping only the
//! per-outcome counts is a single multinomial draw, which we take as a chain
//! of conditional binomials. Cost is `O(2^n)` per clique regardless of `n`.

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use super::StateVector;
use crate::error::{Error, Result};
use crate::hamiltonian::{CliquePartition, Hamiltonian};
use crate::measurement::ShotAllocation;

/// Sample statistics of one clique measured `shots` times.
#[derive(Debug, Clone, PartialEq)]
pub struct CliqueSample {
    /// Shot mean of each member term's `+-1` eigenvalue (without coefficient),
    /// in clique member order.
    pub term_means: Vec<f64>,
    /// Shot mean of the clique's energy contribution `sum_j c_j s_j`.
    pub mean: f64,
    /// Unbiased sample variance of the per-shot contribution. `None` when a
    /// single shot was taken.
    pub variance: Option<f64>,
    pub shots: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliqueEstimate {
    pub mean: f64,
    pub sample_std: Option<f64>,
    pub shots: u64,
}

/// A shot-sampled energy `E-bar(theta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyEstimate {
    pub energy: f64,
    /// Estimated variance of `energy`: `sum_i s_i^2 / N_i`. `None` if some
    /// clique had a single shot.
    pub variance: Option<f64>,
    pub cliques: Vec<CliqueEstimate>,
    pub total_shots: u64,
}

impl EnergyEstimate {
    /// A noiseless estimate that consumed no shots.
    pub fn exact(energy: f64, n_cliques: usize) -> Self {
        EnergyEstimate {
            energy,
            variance: Some(0.0),
            cliques: vec![
                CliqueEstimate {
                    mean: f64::NAN,
                    sample_std: None,
                    shots: 0,
                };
                n_cliques
            ],
            total_shots: 0,
        }
    }
}

/// Per-outcome counts of `shots` draws from `probs`.
pub(crate) fn multinomial<R: Rng + ?Sized>(probs: &[f64], shots: u64, rng: &mut R) -> Vec<u64> {
    let mut suffix = vec![0.0; probs.len() + 1];
    for k in (0..probs.len()).rev() {
        suffix[k] = suffix[k + 1] + probs[k];
    }
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = shots;
    for (k, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let draw = if suffix[k + 1] <= 0.0 {
            remaining
        } else if p <= 0.0 {
            0
        } else {
            let cond = (p / suffix[k]).min(1.0);
            Binomial::new(remaining, cond)
                .expect("probability in (0, 1]")
                .sample(rng)
        };
        counts[k] = draw;
        remaining -= draw;
    }
    counts
}

pub fn sample_clique<R: Rng + ?Sized>(
    state: &StateVector,
    hamiltonian: &Hamiltonian,
    partition: &CliquePartition,
    clique_id: usize,
    n_shots: u64,
    rng: &mut R,
) -> Result<CliqueSample> {
    if n_shots == 0 {
        return Err(Error::Contract("a clique needs at least one shot".into()));
    }
    if state.n_qubits() != hamiltonian.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: hamiltonian.n_qubits(),
            actual: state.n_qubits(),
        });
    }
    let clique = partition
        .cliques
        .get(clique_id)
        .ok_or_else(|| Error::Contract(format!("no clique {clique_id}")))?;

    let mut rotated = state.clone();
    rotated.rotate_to_basis(&clique.basis);
    let counts = multinomial(&rotated.probabilities(), n_shots, rng);

    let members: Vec<(f64, usize)> = clique
        .terms
        .iter()
        .map(|&t| {
            let term = &hamiltonian.terms()[t];
            (term.coefficient, term.string.support_mask())
        })
        .collect();
    let eigenvalue = |outcome: usize, mask: usize| {
        if (outcome & mask).count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    };
    let contribution = |outcome: usize| -> f64 { members.iter().map(|&(c, mask)| c * eigenvalue(outcome, mask)).sum() };

    let n = n_shots as f64;
    let observed: Vec<(usize, f64)> = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(b, &c)| (b, c as f64))
        .collect();
    let term_means = members
        .iter()
        .map(|&(_, mask)| observed.iter().map(|&(b, c)| c * eigenvalue(b, mask)).sum::<f64>() / n)
        .collect();
    let mean = observed.iter().map(|&(b, c)| c * contribution(b)).sum::<f64>() / n;
    let variance = (n_shots > 1).then(|| {
        observed
            .iter()
            .map(|&(b, c)| c * (contribution(b) - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0)
    });
    Ok(CliqueSample {
        term_means,
        mean,
        variance,
        shots: n_shots,
    })
}

/// Sum of per-clique shot means plus the analytic identity constant.
pub fn estimate_energy<R: Rng + ?Sized>(
    state: &StateVector,
    hamiltonian: &Hamiltonian,
    partition: &CliquePartition,
    allocation: &ShotAllocation,
    rng: &mut R,
) -> Result<EnergyEstimate> {
    if allocation.len() != partition.len() {
        return Err(Error::Contract(format!(
            "allocation covers {} cliques, partition has {}",
            allocation.len(),
            partition.len()
        )));
    }
    let mut energy = hamiltonian.identity_constant();
    let mut variance = Some(0.0);
    let mut cliques = Vec::with_capacity(partition.len());
    for (i, &shots) in allocation.per_clique().iter().enumerate() {
        let sample = sample_clique(state, hamiltonian, partition, i, shots, rng)?;
        energy += sample.mean;
        variance = match (variance, sample.variance) {
            (Some(v), Some(s)) => Some(v + s / shots as f64),
            _ => None,
        };
        cliques.push(CliqueEstimate {
            mean: sample.mean,
            sample_std: sample.variance.map(f64::sqrt),
            shots,
        });
    }
    Ok(EnergyEstimate {
        energy,
        variance,
        cliques,
        total_shots: allocation.total(),
    })
}

//! Splitting a per-evaluation shot total among Hamiltonian cliques.
//!
//! Variance minimization assigns shots in proportion to each clique's
//! standard deviation, which minimizes `sum_i sigma_i^2 / N_i` for a fixed
//! `sum_i N_i`. The standard deviations are tracked online as an
//! exponential moving average of per-clique sample stds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulator::EnergyEstimate;

/// Smoothing weight on the previous EMA value.
pub const EMA_BETA: f64 = 0.7;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotAllocation {
    per_clique: Vec<u64>,
}

impl ShotAllocation {
    pub fn new(per_clique: Vec<u64>) -> Result<Self> {
        if per_clique.contains(&0) {
            return Err(Error::Contract("every clique needs at least one shot".into()));
        }
        Ok(ShotAllocation { per_clique })
    }

    pub fn per_clique(&self) -> &[u64] {
        &self.per_clique
    }

    pub fn total(&self) -> u64 {
        self.per_clique.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.per_clique.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_clique.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliqueStats {
    pub ema_std: Vec<f64>,
    pub warm: Vec<bool>,
}

impl CliqueStats {
    pub fn new(n_cliques: usize) -> Self {
        CliqueStats {
            ema_std: vec![0.0; n_cliques],
            warm: vec![false; n_cliques],
        }
    }

    pub fn len(&self) -> usize {
        self.ema_std.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ema_std.is_empty()
    }

    pub fn all_warm(&self) -> bool {
        self.warm.iter().all(|&w| w)
    }
}

fn check_budget(n_total: u64, n_cliques: usize) -> Result<()> {
    if n_cliques > 0 && n_total < n_cliques as u64 {
        return Err(Error::Contract(format!(
            "budget {n_total} cannot give {n_cliques} cliques one shot each"
        )));
    }
    Ok(())
}

/// Equal split; the first `n_total % n_cliques` cliques get one extra shot.
pub fn allocate_uniform(n_total: u64, n_cliques: usize) -> Result<ShotAllocation> {
    check_budget(n_total, n_cliques)?;
    if n_cliques == 0 {
        return Ok(ShotAllocation { per_clique: vec![] });
    }
    let k = n_cliques as u64;
    let (base, extra) = (n_total / k, n_total % k);
    Ok(ShotAllocation {
        per_clique: (0..k).map(|i| base + u64::from(i < extra)).collect(),
    })
}

/// Shots proportional to `stats.ema_std`, at least one per clique, summing to
/// `n_total`. Falls back to [`allocate_uniform`] until every clique is warm or
/// when all stds are zero.
pub fn allocate_vm(n_total: u64, stats: &CliqueStats) -> Result<ShotAllocation> {
    allocate_vm_with_floor(n_total, stats, 1)
}

/// [`allocate_vm`] with at least `floor` shots per clique. The floor drops to
/// one when the budget cannot cover it.
pub fn allocate_vm_with_floor(n_total: u64, stats: &CliqueStats, floor: u64) -> Result<ShotAllocation> {
    let m = stats.len();
    check_budget(n_total, m)?;
    if let Some(bad) = stats.ema_std.iter().find(|s| !s.is_finite() || **s < 0.0) {
        return Err(Error::Contract(format!("invalid standard deviation {bad}")));
    }
    let sum: f64 = stats.ema_std.iter().sum();
    if m == 0 || !stats.all_warm() || sum <= 0.0 {
        return allocate_uniform(n_total, m);
    }
    let floor = if n_total >= floor.max(1) * m as u64 {
        floor.max(1)
    } else {
        1
    };

    let target: Vec<f64> = stats.ema_std.iter().map(|s| n_total as f64 * s / sum).collect();
    let mut alloc: Vec<u64> = target.iter().map(|&t| (t.round() as u64).max(floor)).collect();

    // Largest-remainder correction; ties go to the lower clique index.
    let mut assigned: u64 = alloc.iter().sum();
    while assigned < n_total {
        let i = argmax(m, |i| target[i] - alloc[i] as f64, |_| true);
        alloc[i] += 1;
        assigned += 1;
    }
    while assigned > n_total {
        let i = argmax(m, |i| alloc[i] as f64 - target[i], |i| alloc[i] > floor);
        alloc[i] -= 1;
        assigned -= 1;
    }
    Ok(ShotAllocation { per_clique: alloc })
}

fn argmax(m: usize, key: impl Fn(usize) -> f64, eligible: impl Fn(usize) -> bool) -> usize {
    let mut best: Option<usize> = None;
    for i in (0..m).filter(|&i| eligible(i)) {
        if best.is_none_or(|b| key(i) > key(b)) {
            best = Some(i);
        }
    }
    best.expect("budget check guarantees an eligible clique")
}

/// Folds the estimate's per-clique sample stds into the EMA. Cliques measured
/// with a single shot carry no std and are left untouched.
pub fn update_stats(stats: &mut CliqueStats, estimate: &EnergyEstimate) {
    for (i, clique) in estimate.cliques.iter().enumerate().take(stats.len()) {
        if let Some(s) = clique.sample_std {
            if stats.warm[i] {
                stats.ema_std[i] = EMA_BETA * stats.ema_std[i] + (1.0 - EMA_BETA) * s;
            } else {
                stats.ema_std[i] = s;
                stats.warm[i] = true;
            }
        }
    }
}

/// Per-clique shot floor used by [`Allocator::Vm`]. A clique measured once
/// yields no sample std, so with a floor of one its EMA could freeze near zero
/// and never recover.
pub const VM_RUN_FLOOR: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Allocator {
    Uniform,
    #[serde(alias = "variance-minimization")]
    Vm,
}

impl Allocator {
    pub fn allocate(self, n_total: u64, stats: &CliqueStats) -> Result<ShotAllocation> {
        match self {
            Allocator::Uniform => allocate_uniform(n_total, stats.len()),
            Allocator::Vm => allocate_vm_with_floor(n_total, stats, VM_RUN_FLOOR),
        }
    }
}

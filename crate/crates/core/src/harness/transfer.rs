use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::campaign::{run_prepared, CampaignSummary};
use super::config::{ExperimentConfig, Method};
use crate::error::{Error, Result};

/// `1 - rl / uniform`.
pub fn reduction(rl_median: f64, uniform_median: f64) -> f64 {
    1.0 - rl_median / uniform_median
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferRow {
    pub system: String,
    pub rl_method: Method,
    pub rl_median: Option<f64>,
    pub uniform_median: Option<f64>,
    /// `None` when either side never reached the threshold.
    pub reduction: Option<f64>,
    pub rl_never_reached: usize,
    pub uniform_never_reached: usize,
    /// The same comparison on the noiseless-energy criterion.
    pub rl_median_exact: Option<f64>,
    pub uniform_median_exact: Option<f64>,
    pub reduction_exact: Option<f64>,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub checkpoint: PathBuf,
    pub rows: Vec<TransferRow>,
    pub summaries: Vec<CampaignSummary>,
}

impl TransferReport {
    pub fn to_table(&self) -> String {
        let mut out = String::from(
            "system\tmethod\trl_median\tuniform_median\treduction\trl_never\tuniform_never\treduction_exact\n",
        );
        let fmt = |v: Option<f64>| v.map_or("-".to_owned(), |v| format!("{v:.0}"));
        let pct = |v: Option<f64>| v.map_or("-".to_owned(), |x| format!("{:.1}%", 100.0 * x));
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}/{}\t{}/{}\t{}",
                r.system,
                r.rl_method,
                fmt(r.rl_median),
                fmt(r.uniform_median),
                pct(r.reduction),
                r.rl_never_reached,
                r.trials,
                r.uniform_never_reached,
                r.trials,
                pct(r.reduction_exact)
            );
        }
        out
    }
}

fn pair_key(c: &ExperimentConfig) -> impl PartialEq + std::fmt::Debug {
    (
        c.resolve(&c.hamiltonian),
        c.resolve(&c.ansatz),
        c.budget,
        format!("{:?}", c.optimizer),
        c.trials,
        c.base_seed,
        c.exact,
    )
}

/// Matches every RL config with the Uniform config for the same system,
/// budget, optimizer and seeds.
pub fn pair_configs(configs: &[ExperimentConfig]) -> Result<Vec<(ExperimentConfig, ExperimentConfig)>> {
    let (rl, rest): (Vec<_>, Vec<_>) = configs.iter().partition(|c| c.method.uses_policy());
    if let Some(c) = rest.iter().find(|c| c.method != Method::Uniform) {
        return Err(Error::Config(format!(
            "transfer pairs RL methods with uniform, got {} for {}",
            c.method,
            c.hamiltonian.display()
        )));
    }
    let mut uniform: Vec<Option<&ExperimentConfig>> = rest.into_iter().map(Some).collect();
    let mut pairs = Vec::new();
    for r in rl {
        let key = pair_key(r);
        let slot = uniform
            .iter_mut()
            .find(|u| u.is_some_and(|u| pair_key(u) == key))
            .ok_or_else(|| {
                Error::Config(format!(
                    "no uniform counterpart for {} on {}",
                    r.method,
                    r.hamiltonian.display()
                ))
            })?;
        pairs.push((r.clone(), slot.take().expect("matched").clone()));
    }
    if let Some(u) = uniform.into_iter().flatten().next() {
        return Err(Error::Config(format!(
            "uniform config for {} has no RL counterpart",
            u.hamiltonian.display()
        )));
    }
    if pairs.is_empty() {
        return Err(Error::Config("transfer needs at least one RL/uniform pair".into()));
    }
    Ok(pairs)
}

/// Runs each RL/Uniform pair with the policy in `checkpoint` and reports the
/// median reduction per system. All configs are validated before any run.
pub fn transfer_eval(checkpoint: &Path, configs: &[ExperimentConfig]) -> Result<TransferReport> {
    let pairs = pair_configs(configs)?;
    let checkpoint = std::path::absolute(checkpoint).map_err(|e| Error::io(checkpoint, e))?;
    let prepared = pairs
        .into_iter()
        .map(|(mut rl, u)| {
            rl.checkpoint = Some(checkpoint.clone());
            Ok((rl.prepare()?, u.prepare()?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for (rl, u) in &prepared {
        let rl_c = run_prepared(rl)?;
        let u_c = run_prepared(u)?;
        let (rm, um) = (rl_c.summary.shots.median(), u_c.summary.shots.median());
        let exact_median =
            |c: &super::campaign::Campaign| c.summary.shots.shots_to_threshold_exact.as_ref().map(|b| b.median);
        let (rme, ume) = (exact_median(&rl_c), exact_median(&u_c));
        rows.push(TransferRow {
            system: rl_c.summary.system.clone(),
            rl_method: rl.config.method,
            rl_median: rm,
            uniform_median: um,
            reduction: rm.zip(um).map(|(r, u)| reduction(r, u)),
            rl_never_reached: rl_c.summary.shots.never_reached,
            uniform_never_reached: u_c.summary.shots.never_reached,
            rl_median_exact: rme,
            uniform_median_exact: ume,
            reduction_exact: rme.zip(ume).map(|(r, u)| reduction(r, u)),
            trials: rl.config.trials,
        });
        summaries.push(rl_c.summary);
        summaries.push(u_c.summary);
    }
    Ok(TransferReport {
        checkpoint,
        rows,
        summaries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_examples() {
        assert_eq!(reduction(1.0e6, 2.0e6), 0.5);
        assert_eq!(reduction(3.0e5, 3.0e5), 0.0);
    }

    fn cfg(method: &str, ham: &str) -> ExperimentConfig {
        let text = format!(
            "hamiltonian = \"{ham}\"\nansatz = \"a.toml\"\nbudget = 3000\nmethod = \"{method}\"\ntrials = 3\nbase_seed = 1\n\
             [optimizer]\nkind = \"gd\"\nlearning_rate = 0.1\nmax_iterations = 10\n"
        );
        ExperimentConfig::parse(&text, Path::new("/c")).unwrap()
    }

    #[test]
    fn pairing() {
        let pairs = pair_configs(&[
            cfg("uniform", "b.toml"),
            cfg("rl-uniform", "a.toml"),
            cfg("rl-vm", "b.toml"),
            cfg("uniform", "a.toml"),
        ])
        .unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].1.hamiltonian, Path::new("a.toml"));
        assert_eq!(pairs[1].1.hamiltonian, Path::new("b.toml"));

        assert!(pair_configs(&[cfg("rl-uniform", "a.toml"), cfg("uniform", "b.toml")]).is_err());
        assert!(pair_configs(&[cfg("rl-uniform", "a.toml")]).is_err());
        assert!(pair_configs(&[cfg("vm", "a.toml"), cfg("rl-vm", "a.toml")]).is_err());
        assert!(pair_configs(&[
            cfg("uniform", "a.toml"),
            cfg("rl-uniform", "a.toml"),
            cfg("uniform", "a.toml")
        ])
        .is_err());
    }
}

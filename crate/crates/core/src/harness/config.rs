use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{read_to_string, toml_error, Error, Result};
use crate::measurement::Allocator;
use crate::rl::{shots_for_action, Mlp, PolicyCheckpoint, A_MIN};
use crate::vqe::{Estimator, OptimizerConfig, VqeProblem, VqeSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "uniform")]
    Uniform,
    #[serde(rename = "vm")]
    Vm,
    #[serde(rename = "rl-uniform")]
    RlUniform,
    #[serde(rename = "rl-vm")]
    RlVm,
}

impl Method {
    pub fn allocator(self) -> Allocator {
        match self {
            Method::Uniform | Method::RlUniform => Allocator::Uniform,
            Method::Vm | Method::RlVm => Allocator::Vm,
        }
    }

    pub fn uses_policy(self) -> bool {
        matches!(self, Method::RlUniform | Method::RlVm)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Uniform => "uniform",
            Method::Vm => "vm",
            Method::RlUniform => "rl-uniform",
            Method::RlVm => "rl-vm",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One evaluation campaign. Relative paths resolve against the directory of
/// the file the config was loaded from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub hamiltonian: PathBuf,
    pub ansatz: PathBuf,
    pub optimizer: OptimizerConfig,
    /// Shots per energy evaluation, `N`.
    pub budget: u64,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
    pub trials: usize,
    pub base_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Noiseless energies; shot metrics are not recorded.
    #[serde(default)]
    pub exact: bool,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// A config whose files have been loaded and checked.
#[derive(Debug, Clone)]
pub struct PreparedExperiment {
    pub config: ExperimentConfig,
    pub problem: Arc<VqeProblem>,
    pub policy: Option<Mlp>,
}

impl ExperimentConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| toml_error(text, e))?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
        Self::parse(&text, &base).map_err(|e| match e {
            Error::Parse { location, message } => Error::Parse {
                location: format!("{}: {location}", path.display()),
                message,
            },
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn output_path(&self) -> Option<PathBuf> {
        self.output_dir.as_deref().map(|p| self.resolve(p))
    }

    pub fn settings(&self) -> VqeSettings {
        VqeSettings {
            optimizer: self.optimizer,
            estimator: if self.exact {
                Estimator::Exact
            } else {
                Estimator::Shots(self.method.allocator())
            },
        }
    }

    /// Loads fixtures and the checkpoint and checks every invariant, so a
    /// campaign never fails on configuration after it has started.
    pub fn prepare(&self) -> Result<PreparedExperiment> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        self.optimizer.validate()?;
        let require = |p: &Path, what: &str| {
            let full = self.resolve(p);
            if full.is_file() {
                Ok(full)
            } else {
                Err(Error::Config(format!("{what} not found: {}", full.display())))
            }
        };
        let hamiltonian = require(&self.hamiltonian, "hamiltonian fixture")?;
        let ansatz = require(&self.ansatz, "ansatz file")?;
        let problem = VqeProblem::load(&hamiltonian, &ansatz)
            .map_err(|e| Error::Config(format!("cannot set up problem: {e}")))?;
        let cliques = problem.n_cliques() as u64;
        if !self.exact && self.budget < cliques {
            return Err(Error::Config(format!(
                "budget {} is smaller than the {cliques} cliques",
                self.budget
            )));
        }
        let policy = if self.method.uses_policy() {
            let path = self
                .checkpoint
                .as_deref()
                .ok_or_else(|| Error::Config(format!("method {} needs a checkpoint", self.method)))?;
            let path = require(path, "policy checkpoint")?;
            let ck = PolicyCheckpoint::load(&path)
                .map_err(|e| Error::Config(format!("cannot load checkpoint {}: {e}", path.display())))?;
            if !self.exact && shots_for_action(self.budget, A_MIN) < cliques {
                return Err(Error::Config(format!(
                    "budget {}: the smallest action cannot cover {cliques} cliques",
                    self.budget
                )));
            }
            Some(ck.actor)
        } else {
            None
        };
        Ok(PreparedExperiment {
            config: self.clone(),
            problem: Arc::new(problem),
            policy,
        })
    }
}

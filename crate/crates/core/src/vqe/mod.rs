//! The VQE optimization loop.
//!
//! Each iteration spends one energy evaluation on the trace and
//! `2 * n_params` evaluations on the parameter-shift gradient, all at the
//! same per-evaluation budget `N_t` chosen by a [`ShotController`].

mod gradient;
mod optimizer;
mod trace;

pub use gradient::{parameter_shift_gradient, Gradient};
pub use optimizer::{optimizer_step, OptimizerConfig, OptimizerKind, OptimizerState};
pub use trace::{IterationRecord, VqeTrace};

use std::path::Path;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::hamiltonian::{group_cliques, load_hamiltonian, CliquePartition, Hamiltonian};
use crate::measurement::{update_stats, Allocator, CliqueStats};
use crate::rng::SimRng;
use crate::simulator::{
    estimate_energy, exact_expectation, load_circuit, prepare_state, AnsatzCircuit, EnergyEstimate,
};

/// Half-width of the uniform initial-parameter distribution.
pub const INIT_SCALE: f64 = 0.1;

/// A Hamiltonian paired with an ansatz, plus the derived clique partition and
/// ground energy.
#[derive(Debug, Clone)]
pub struct VqeProblem {
    pub circuit: AnsatzCircuit,
    pub hamiltonian: Hamiltonian,
    pub partition: CliquePartition,
    pub ground_energy: f64,
}

impl VqeProblem {
    pub fn new(circuit: AnsatzCircuit, hamiltonian: Hamiltonian) -> Result<Self> {
        if circuit.n_qubits() != hamiltonian.n_qubits() {
            return Err(Error::DimensionMismatch {
                expected: hamiltonian.n_qubits(),
                actual: circuit.n_qubits(),
            });
        }
        circuit.check_shift_rule()?;
        let partition = group_cliques(&hamiltonian);
        let ground_energy = hamiltonian.exact_ground_energy()?;
        Ok(VqeProblem {
            circuit,
            hamiltonian,
            partition,
            ground_energy,
        })
    }

    pub fn load(hamiltonian: &Path, ansatz: &Path) -> Result<Self> {
        Self::new(load_circuit(ansatz)?, load_hamiltonian(hamiltonian)?)
    }

    pub fn n_params(&self) -> usize {
        self.circuit.n_params()
    }

    pub fn n_cliques(&self) -> usize {
        self.partition.len()
    }

    pub fn exact_energy(&self, params: &[f64]) -> Result<f64> {
        exact_expectation(&prepare_state(&self.circuit, params)?, &self.hamiltonian)
    }

    /// One energy evaluation at `params`.
    pub fn evaluate(
        &self,
        params: &[f64],
        estimator: Estimator,
        n_shots: u64,
        stats: &CliqueStats,
        rng: &mut SimRng,
    ) -> Result<EnergyEstimate> {
        let state = prepare_state(&self.circuit, params)?;
        match estimator {
            Estimator::Exact => Ok(EnergyEstimate::exact(
                exact_expectation(&state, &self.hamiltonian)?,
                self.n_cliques(),
            )),
            Estimator::Shots(allocator) => {
                let allocation = allocator.allocate(n_shots, stats)?;
                estimate_energy(&state, &self.hamiltonian, &self.partition, &allocation, rng)
            }
        }
    }
}

/// How energies are obtained: noiselessly (testing only) or from shots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    Exact,
    Shots(Allocator),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VqeSettings {
    pub optimizer: OptimizerConfig,
    pub estimator: Estimator,
}

/// Draws each parameter from `U[-0.1, 0.1]`.
pub fn initial_params(n: usize, rng: &mut SimRng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-INIT_SCALE..=INIT_SCALE)).collect()
}

/// A VQE run advanced one iteration at a time.
#[derive(Debug, Clone)]
pub struct VqeRun {
    problem: Arc<VqeProblem>,
    settings: VqeSettings,
    params: Vec<f64>,
    optimizer: OptimizerState,
    stats: CliqueStats,
    trace: VqeTrace,
}

impl VqeRun {
    pub fn new(problem: Arc<VqeProblem>, settings: VqeSettings, initial: Vec<f64>) -> Result<Self> {
        settings.optimizer.validate()?;
        if initial.len() != problem.n_params() {
            return Err(Error::DimensionMismatch {
                expected: problem.n_params(),
                actual: initial.len(),
            });
        }
        Ok(VqeRun {
            optimizer: OptimizerState::new(&settings.optimizer, initial.len()),
            stats: CliqueStats::new(problem.n_cliques()),
            trace: VqeTrace::default(),
            params: initial,
            settings,
            problem,
        })
    }

    /// Starts from parameters drawn with [`initial_params`].
    pub fn with_random_init(problem: Arc<VqeProblem>, settings: VqeSettings, rng: &mut SimRng) -> Result<Self> {
        let init = initial_params(problem.n_params(), rng);
        Self::new(problem, settings, init)
    }

    pub fn problem(&self) -> &VqeProblem {
        &self.problem
    }

    pub fn settings(&self) -> &VqeSettings {
        &self.settings
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn stats(&self) -> &CliqueStats {
        &self.stats
    }

    pub fn trace(&self) -> &VqeTrace {
        &self.trace
    }

    pub fn into_trace(self) -> VqeTrace {
        self.trace
    }

    /// Number of completed iterations.
    pub fn iteration(&self) -> usize {
        self.trace.len()
    }

    pub fn is_finished(&self) -> bool {
        self.iteration() >= self.settings.optimizer.max_iterations
    }

    /// Runs one iteration with `n_shots` per energy evaluation.
    pub fn step(&mut self, n_shots: u64, rng: &mut SimRng) -> Result<&IterationRecord> {
        let t = self.iteration();
        if self.is_finished() {
            return Err(Error::Contract(format!("run already finished after {t} iterations")));
        }
        self.step_inner(t, n_shots, rng).map_err(|e| Error::AtIteration {
            iteration: t,
            source: Box::new(e),
        })?;
        Ok(self.trace.last().expect("just pushed"))
    }

    fn step_inner(&mut self, t: usize, n_shots: u64, rng: &mut SimRng) -> Result<()> {
        let estimator = self.settings.estimator;
        let estimate = self
            .problem
            .evaluate(&self.params, estimator, n_shots, &self.stats, rng)?;
        update_stats(&mut self.stats, &estimate);
        let exact = match estimator {
            Estimator::Exact => estimate.energy,
            Estimator::Shots(_) => self.problem.exact_energy(&self.params)?,
        };
        let gradient = parameter_shift_gradient(&self.problem, &self.params, estimator, n_shots, &self.stats, rng)?;
        let snapshot = self.params.clone();
        optimizer_step(
            &self.settings.optimizer,
            &mut self.optimizer,
            &mut self.params,
            &gradient.values,
            t,
        )?;

        let shots = estimate.total_shots + gradient.shots;
        let cumulative = self.trace.cumulative_shots() + shots;
        self.trace.push(IterationRecord {
            iteration: t,
            estimated_energy: estimate.energy,
            exact_energy: exact,
            shots_this_iter: shots,
            cumulative_shots: cumulative,
            params: snapshot,
        });
        Ok(())
    }
}

/// Picks the per-evaluation shot count before each iteration.
pub trait ShotController {
    /// Shots for the next iteration, or `None` to stop early.
    fn next_shots(&mut self, run: &VqeRun, rng: &mut SimRng) -> Result<Option<u64>>;
}

/// The baseline: the same budget every iteration.
#[derive(Debug, Clone, Copy)]
pub struct FixedShots(pub u64);

impl ShotController for FixedShots {
    fn next_shots(&mut self, _run: &VqeRun, _rng: &mut SimRng) -> Result<Option<u64>> {
        Ok(Some(self.0))
    }
}

/// Runs until `max_iterations` or until the controller stops, starting from
/// parameters drawn from `rng`.
pub fn run_vqe(
    problem: Arc<VqeProblem>,
    settings: VqeSettings,
    controller: &mut dyn ShotController,
    rng: &mut SimRng,
) -> Result<VqeTrace> {
    let mut run = VqeRun::with_random_init(problem, settings, rng)?;
    drive(&mut run, controller, rng)?;
    Ok(run.into_trace())
}

/// Steps `run` under `controller` until it finishes or is stopped.
pub fn drive(run: &mut VqeRun, controller: &mut dyn ShotController, rng: &mut SimRng) -> Result<()> {
    while !run.is_finished() {
        match controller.next_shots(run, rng)? {
            Some(n) => {
                run.step(n, rng)?;
            }
            None => break,
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::simulator::presets;

    #[allow(clippy::excessive_precision)]
    fn h2() -> Arc<VqeProblem> {
        let h = Hamiltonian::from_terms(
            2,
            &[
                (-0.66609231016670756, "II"),
                (-0.088890551662390627, "IZ"),
                (0.24507502046287882, "XX"),
                (0.088890551662390599, "ZI"),
                (-0.0025248150372093325, "ZZ"),
            ],
        )
        .unwrap();
        Arc::new(VqeProblem::new(presets::h2(), h).unwrap())
    }

    fn settings(estimator: Estimator) -> VqeSettings {
        VqeSettings {
            optimizer: OptimizerConfig::gd(),
            estimator,
        }
    }

    #[test]
    fn exact_gd_reaches_ground_state() {
        let p = h2();
        let mut run = VqeRun::new(p.clone(), settings(Estimator::Exact), vec![0.1, 0.1]).unwrap();
        drive(&mut run, &mut FixedShots(0), &mut seeded(0)).unwrap();
        assert_eq!(run.iteration(), 500);
        let last = p.exact_energy(run.params()).unwrap();
        assert!((last - p.ground_energy).abs() < 1e-3, "{last} vs {}", p.ground_energy);
    }

    #[test]
    fn exact_descent_is_monotone() {
        let p = h2();
        let mut rng = seeded(11);
        let trace = run_vqe(p, settings(Estimator::Exact), &mut FixedShots(0), &mut rng).unwrap();
        for w in trace.records().windows(2) {
            assert!(w[1].exact_energy <= w[0].exact_energy + 1e-9);
        }
        assert!(trace.records().iter().all(|r| r.shots_this_iter == 0));
    }

    #[test]
    fn exact_mode_is_deterministic() {
        let a = run_vqe(h2(), settings(Estimator::Exact), &mut FixedShots(0), &mut seeded(3)).unwrap();
        let b = run_vqe(h2(), settings(Estimator::Exact), &mut FixedShots(0), &mut seeded(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn shot_accounting() {
        let p = h2();
        let mut s = settings(Estimator::Shots(Allocator::Uniform));
        s.optimizer.max_iterations = 40;
        let trace = run_vqe(p, s, &mut FixedShots(3000), &mut seeded(5)).unwrap();
        for (t, r) in trace.records().iter().enumerate() {
            assert_eq!(r.shots_this_iter, 15_000);
            assert_eq!(r.cumulative_shots, (t as u64 + 1) * 5 * 3000);
        }
    }

    #[test]
    fn sampled_and_exact_energies_correlate() {
        // most of a 500-iteration trace sits on the plateau where only shot
        // noise varies, so r hovers around 0.95 from seed to seed
        let p = h2();
        for seed in 0..4 {
            let est = Estimator::Shots(Allocator::Uniform);
            let trace = run_vqe(p.clone(), settings(est), &mut FixedShots(3000), &mut seeded(seed)).unwrap();
            let r = pearson(&trace.estimated(), &trace.exact());
            assert!(r > 0.9, "seed {seed}: r = {r}");
        }
    }

    fn pearson(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    }

    struct StopAfter(usize);

    impl ShotController for StopAfter {
        fn next_shots(&mut self, run: &VqeRun, _rng: &mut SimRng) -> Result<Option<u64>> {
            Ok((run.iteration() < self.0).then_some(100))
        }
    }

    #[test]
    fn controller_can_stop_early() {
        let trace = run_vqe(
            h2(),
            settings(Estimator::Shots(Allocator::Vm)),
            &mut StopAfter(7),
            &mut seeded(1),
        )
        .unwrap();
        assert_eq!(trace.len(), 7);
    }

    #[test]
    fn errors_carry_iteration() {
        let mut run = VqeRun::new(h2(), settings(Estimator::Shots(Allocator::Uniform)), vec![0.0, 0.0]).unwrap();
        run.step(10, &mut seeded(0)).unwrap();
        // two cliques cannot share one shot
        let err = run.step(1, &mut seeded(0)).unwrap_err();
        assert!(matches!(err, Error::AtIteration { iteration: 1, .. }), "{err}");
    }

    #[test]
    fn mismatched_problem_is_rejected() {
        let h = Hamiltonian::from_terms(1, &[(1.0, "Z")]).unwrap();
        assert!(matches!(
            VqeProblem::new(presets::h2(), h),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn initial_params_in_range() {
        let mut rng = seeded(8);
        let p = initial_params(1000, &mut rng);
        assert!(p.iter().all(|x| x.abs() <= INIT_SCALE));
        assert!(p.iter().any(|&x| x < -0.09) && p.iter().any(|&x| x > 0.09));
    }
}

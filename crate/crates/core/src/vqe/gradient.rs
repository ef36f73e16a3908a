use std::f64::consts::FRAC_PI_2;

use super::{Estimator, VqeProblem};
use crate::error::Result;
use crate::measurement::CliqueStats;
use crate::rng::SimRng;

#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub values: Vec<f64>,
    /// Shots spent on the `2 * n_params` shifted evaluations.
    pub shots: u64,
}

/// `dE/dtheta_k = (E(theta + pi/2 e_k) - E(theta - pi/2 e_k)) / 2`, each
/// energy from its own allocation of `shots_per_eval` shots.
pub fn parameter_shift_gradient(
    problem: &VqeProblem,
    params: &[f64],
    estimator: Estimator,
    shots_per_eval: u64,
    stats: &CliqueStats,
    rng: &mut SimRng,
) -> Result<Gradient> {
    problem.circuit.check_shift_rule()?;
    let mut shifted = params.to_vec();
    let mut values = Vec::with_capacity(params.len());
    let mut shots = 0;
    for k in 0..params.len() {
        shifted[k] = params[k] + FRAC_PI_2;
        let plus = problem.evaluate(&shifted, estimator, shots_per_eval, stats, rng)?;
        shifted[k] = params[k] - FRAC_PI_2;
        let minus = problem.evaluate(&shifted, estimator, shots_per_eval, stats, rng)?;
        shifted[k] = params[k];
        values.push(0.5 * (plus.energy - minus.energy));
        shots += plus.total_shots + minus.total_shots;
    }
    Ok(Gradient { values, shots })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::hamiltonian::Hamiltonian;
    use crate::measurement::Allocator;
    use crate::rng::seeded;
    use crate::simulator::{presets, Angle, AnsatzCircuit, Axis, Gate};
    use proptest::prelude::*;

    fn ry_z() -> VqeProblem {
        let c = AnsatzCircuit::new("ry", 1, 1, 0, vec![Gate::ry(0, 0)]).unwrap();
        VqeProblem::new(c, Hamiltonian::from_terms(1, &[(1.0, "Z")]).unwrap()).unwrap()
    }

    #[test]
    fn single_qubit_gradient_is_minus_sine() {
        let p = ry_z();
        let stats = CliqueStats::new(1);
        for theta in [0.0, 0.3, 1.0, -2.5, 3.0] {
            let g = parameter_shift_gradient(&p, &[theta], Estimator::Exact, 0, &stats, &mut seeded(0)).unwrap();
            assert!((g.values[0] + f64::sin(theta)).abs() < 1e-10);
            assert_eq!(g.shots, 0);
        }
    }

    #[test]
    fn h2_gradient_shot_count() {
        let h = Hamiltonian::from_terms(2, &[(-0.67, "II"), (-0.09, "IZ"), (0.25, "XX"), (0.09, "ZI")]).unwrap();
        let p = VqeProblem::new(presets::h2(), h).unwrap();
        let stats = CliqueStats::new(p.n_cliques());
        let est = Estimator::Shots(Allocator::Uniform);
        let g = parameter_shift_gradient(&p, &[0.1, -0.2], est, 3000, &stats, &mut seeded(1)).unwrap();
        assert_eq!(g.shots, 12_000);
    }

    #[test]
    fn shared_parameter_is_unsupported() {
        let c = AnsatzCircuit::new("shared", 1, 1, 0, vec![Gate::ry(0, 0), Gate::rz(0, 0)]).unwrap();
        let h = Hamiltonian::from_terms(1, &[(1.0, "Z")]).unwrap();
        assert!(matches!(VqeProblem::new(c, h), Err(Error::UnsupportedAnsatz(_))));
    }

    #[derive(Debug, Clone)]
    enum GateChoice {
        Rot(Axis, usize),
        Cnot(usize, usize),
        H(usize),
    }

    fn random_problem() -> impl Strategy<Value = (VqeProblem, Vec<f64>)> {
        let choice = prop_oneof![
            (0..3u8, 0..3usize).prop_map(|(a, q)| GateChoice::Rot([Axis::X, Axis::Y, Axis::Z][a as usize], q)),
            (0..3usize, 1..3usize).prop_map(|(c, d)| GateChoice::Cnot(c, (c + d) % 3)),
            (0..3usize).prop_map(GateChoice::H),
        ];
        (
            prop::collection::vec(choice, 1..12),
            prop::collection::vec(-3.0f64..3.0, 12),
            prop::collection::vec(-1.0f64..1.0, 6),
        )
            .prop_map(|(specs, thetas, coefs)| {
                let mut n_params = 0;
                let gates = specs
                    .into_iter()
                    .map(|s| match s {
                        GateChoice::Rot(axis, qubit) => {
                            n_params += 1;
                            Gate::Rotation {
                                axis,
                                qubit,
                                angle: Angle::Param(n_params - 1),
                            }
                        }
                        GateChoice::Cnot(c, t) => Gate::cnot(c, t),
                        GateChoice::H(q) => Gate::H { qubit: q },
                    })
                    .collect();
                let c = AnsatzCircuit::new("random", 3, n_params, 2, gates).unwrap();
                let labels = ["XYZ", "ZZI", "IXX", "YIY", "ZIZ", "XII"];
                let terms: Vec<(f64, &str)> = coefs.into_iter().zip(labels).collect();
                let h = Hamiltonian::from_terms(3, &terms).unwrap();
                (VqeProblem::new(c, h).unwrap(), thetas[..n_params].to_vec())
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn shift_rule_matches_finite_differences((problem, theta) in random_problem()) {
            let stats = CliqueStats::new(problem.n_cliques());
            let g = parameter_shift_gradient(&problem, &theta, Estimator::Exact, 0, &stats, &mut seeded(0)).unwrap();
            let h = 1e-5;
            let mut fd = Vec::new();
            let mut x = theta.clone();
            for k in 0..theta.len() {
                x[k] = theta[k] + h;
                let up = problem.exact_energy(&x).unwrap();
                x[k] = theta[k] - h;
                let down = problem.exact_energy(&x).unwrap();
                x[k] = theta[k];
                fd.push((up - down) / (2.0 * h));
            }
            let diff: f64 = g.values.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let norm = g.values.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-3);
            prop_assert!(diff / norm < 1e-6, "shift {:?} fd {:?}", g.values, fd);
        }
    }
}

//! Dense statevector simulation and shot sampling.

mod circuit;
mod sampling;

pub use circuit::{load_circuit, parse_circuit, presets, Angle, AnsatzCircuit, Axis, Gate};
pub use sampling::{estimate_energy, sample_clique, CliqueEstimate, CliqueSample, EnergyEstimate};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::{Hamiltonian, Pauli};

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[index] = Complex64::new(1.0, 0.0);
        StateVector { n_qubits, amps }
    }

    /// Normalizes `amps`; length must be a power of two.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::Contract(format!("amplitude count {len} is not a power of two")));
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Contract("state has zero or non-finite norm".into()));
        }
        Ok(StateVector {
            n_qubits: len.trailing_zeros() as usize,
            amps: amps.into_iter().map(|a| a / norm).collect(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Applies the 2x2 matrix `[[m00, m01], [m10, m11]]` to `qubit`.
    fn apply_single(&mut self, qubit: usize, m: [[Complex64; 2]; 2]) {
        let bit = 1 << qubit;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let a0 = self.amps[i];
                let a1 = self.amps[i | bit];
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[i | bit] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    fn apply_cnot(&mut self, control: usize, target: usize) {
        let c = 1 << control;
        let t = 1 << target;
        for i in 0..self.amps.len() {
            if i & c != 0 && i & t == 0 {
                self.amps.swap(i, i | t);
            }
        }
    }

    pub fn apply(&mut self, gate: &Gate, params: &[f64]) {
        let re = |x: f64| Complex64::new(x, 0.0);
        match *gate {
            Gate::Rotation { axis, qubit, angle } => {
                let half = 0.5 * angle.resolve(params);
                let (c, s) = (half.cos(), half.sin());
                let m = match axis {
                    Axis::X => [[re(c), Complex64::new(0.0, -s)], [Complex64::new(0.0, -s), re(c)]],
                    Axis::Y => [[re(c), re(-s)], [re(s), re(c)]],
                    Axis::Z => [[Complex64::new(c, -s), re(0.0)], [re(0.0), Complex64::new(c, s)]],
                };
                self.apply_single(qubit, m);
            }
            Gate::Cnot { control, target } => self.apply_cnot(control, target),
            Gate::H { qubit } => {
                let h = re(FRAC_1_SQRT_2);
                self.apply_single(qubit, [[h, h], [h, -h]]);
            }
            Gate::Sdg { qubit } => {
                self.apply_single(qubit, [[re(1.0), re(0.0)], [re(0.0), Complex64::new(0.0, -1.0)]]);
            }
        }
    }

    /// Rotates so that a computational-basis measurement reads out `basis`:
    /// H for X, S-dagger then H for Y, nothing for Z.
    pub fn rotate_to_basis(&mut self, basis: &[Pauli]) {
        for (q, &p) in basis.iter().enumerate() {
            match p {
                Pauli::X => self.apply(&Gate::H { qubit: q }, &[]),
                Pauli::Y => {
                    self.apply(&Gate::Sdg { qubit: q }, &[]);
                    self.apply(&Gate::H { qubit: q }, &[]);
                }
                Pauli::Z | Pauli::I => {}
            }
        }
    }
}

/// `U(theta)|ref>` for the circuit's reference basis state.
pub fn prepare_state(circuit: &AnsatzCircuit, params: &[f64]) -> Result<StateVector> {
    if params.len() != circuit.n_params() {
        return Err(Error::DimensionMismatch {
            expected: circuit.n_params(),
            actual: params.len(),
        });
    }
    if let Some(bad) = params.iter().find(|p| !p.is_finite()) {
        return Err(Error::NonFinite(format!("parameter {bad}")));
    }
    let mut state = StateVector::basis(circuit.n_qubits(), circuit.reference_state());
    for gate in circuit.gates() {
        state.apply(gate, params);
    }
    Ok(state)
}

/// `<psi|H|psi>`.
pub fn exact_expectation(state: &StateVector, hamiltonian: &Hamiltonian) -> Result<f64> {
    if state.n_qubits() != hamiltonian.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: hamiltonian.n_qubits(),
            actual: state.n_qubits(),
        });
    }
    let amps = state.amplitudes();
    let mut total = Complex64::new(0.0, 0.0);
    for term in hamiltonian.terms() {
        let x = term.string.x_mask();
        let value: Complex64 = (0..amps.len())
            .map(|b| amps[b ^ x].conj() * term.string.phase_on(b) * amps[b])
            .sum();
        total += value * term.coefficient;
    }
    debug_assert!(total.im.abs() < 1e-10, "imaginary residue {}", total.im);
    Ok(total.re)
}

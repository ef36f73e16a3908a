//! Parameterized ansatz circuits and their TOML file format.
//!
//! ```toml
//! name = "h2-hardware-efficient"
//! n_qubits = 2
//! n_params = 2
//! reference_state = 1
//! gates = [
//!     { gate = "ry", qubit = 0, param = 0 },
//!     { gate = "ry", qubit = 1, param = 1 },
//!     { gate = "cnot", control = 1, target = 0 },
//! ]
//! ```
//!
//! Rotation gates take either `param = k` or a fixed `angle` in radians.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Angle {
    Param(usize),
    Fixed(f64),
}

impl Angle {
    pub fn resolve(self, params: &[f64]) -> f64 {
        match self {
            Angle::Param(k) => params[k],
            Angle::Fixed(a) => a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    /// `exp(-i angle P / 2)` for `P` in {X, Y, Z}.
    Rotation {
        axis: Axis,
        qubit: usize,
        angle: Angle,
    },
    Cnot {
        control: usize,
        target: usize,
    },
    H {
        qubit: usize,
    },
    Sdg {
        qubit: usize,
    },
}

impl Gate {
    pub fn ry(qubit: usize, param: usize) -> Gate {
        Gate::Rotation {
            axis: Axis::Y,
            qubit,
            angle: Angle::Param(param),
        }
    }

    pub fn rz(qubit: usize, param: usize) -> Gate {
        Gate::Rotation {
            axis: Axis::Z,
            qubit,
            angle: Angle::Param(param),
        }
    }

    pub fn rx(qubit: usize, param: usize) -> Gate {
        Gate::Rotation {
            axis: Axis::X,
            qubit,
            angle: Angle::Param(param),
        }
    }

    pub fn cnot(control: usize, target: usize) -> Gate {
        Gate::Cnot { control, target }
    }

    pub fn param(&self) -> Option<usize> {
        match self {
            Gate::Rotation {
                angle: Angle::Param(k), ..
            } => Some(*k),
            _ => None,
        }
    }

    fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::Rotation { qubit, .. } | Gate::H { qubit } | Gate::Sdg { qubit } => vec![qubit],
            Gate::Cnot { control, target } => vec![control, target],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnsatzCircuit {
    pub name: String,
    n_qubits: usize,
    n_params: usize,
    reference_state: usize,
    gates: Vec<Gate>,
}

impl AnsatzCircuit {
    pub fn new(
        name: impl Into<String>,
        n_qubits: usize,
        n_params: usize,
        reference_state: usize,
        gates: Vec<Gate>,
    ) -> Result<Self> {
        if n_qubits == 0 || n_qubits >= usize::BITS as usize {
            return Err(Error::Contract(format!("invalid qubit count {n_qubits}")));
        }
        if reference_state >= 1 << n_qubits {
            return Err(Error::Contract(format!(
                "reference state {reference_state} outside a {n_qubits}-qubit register"
            )));
        }
        for (i, gate) in gates.iter().enumerate() {
            let qs = gate.qubits();
            if let Some(&q) = qs.iter().find(|&&q| q >= n_qubits) {
                return Err(Error::Contract(format!("gate {i}: qubit {q} out of range")));
            }
            if qs.len() == 2 && qs[0] == qs[1] {
                return Err(Error::Contract(format!("gate {i}: control equals target")));
            }
            if let Some(k) = gate.param() {
                if k >= n_params {
                    return Err(Error::Contract(format!(
                        "gate {i}: parameter index {k} >= n_params {n_params}"
                    )));
                }
            }
            if let Gate::Rotation {
                angle: Angle::Fixed(a), ..
            } = gate
            {
                if !a.is_finite() {
                    return Err(Error::NonFinite(format!("gate {i}: angle {a}")));
                }
            }
        }
        Ok(AnsatzCircuit {
            name: name.into(),
            n_qubits,
            n_params,
            reference_state,
            gates,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn reference_state(&self) -> usize {
        self.reference_state
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Checks that each parameter drives exactly one rotation gate, which is
    /// what makes the two-point shift rule exact.
    pub fn check_shift_rule(&self) -> Result<()> {
        let mut uses = vec![0usize; self.n_params];
        for gate in &self.gates {
            if let Some(k) = gate.param() {
                uses[k] += 1;
            }
        }
        match uses.iter().position(|&u| u != 1) {
            Some(k) => Err(Error::UnsupportedAnsatz(format!(
                "parameter {k} drives {} gates; the shift rule needs exactly one",
                uses[k]
            ))),
            None => Ok(()),
        }
    }

    pub fn to_toml_string(&self) -> String {
        let raw = RawCircuit {
            name: self.name.clone(),
            n_qubits: self.n_qubits,
            n_params: self.n_params,
            reference_state: self.reference_state,
            gates: self.gates.iter().map(RawGate::from).collect(),
        };
        // an array of inline tables reads better than [[gates]] blocks
        let mut out = String::new();
        out.push_str(&format!("name = {}\n", toml::Value::String(raw.name)));
        out.push_str(&format!("n_qubits = {}\n", raw.n_qubits));
        out.push_str(&format!("n_params = {}\n", raw.n_params));
        out.push_str(&format!("reference_state = {}\n", raw.reference_state));
        out.push_str("gates = [\n");
        for g in &raw.gates {
            let table = toml::Value::try_from(g).expect("gate serializes");
            let inline = match table {
                toml::Value::Table(t) => {
                    let fields: Vec<String> = ["gate", "qubit", "control", "target", "param", "angle"]
                        .iter()
                        .filter_map(|k| t.get(*k).map(|v| format!("{k} = {v}")))
                        .collect();
                    format!("{{ {} }}", fields.join(", "))
                }
                other => other.to_string(),
            };
            out.push_str(&format!("    {inline},\n"));
        }
        out.push_str("]\n");
        out
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCircuit {
    name: String,
    n_qubits: usize,
    n_params: usize,
    reference_state: usize,
    gates: Vec<RawGate>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGate {
    gate: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    qubit: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    control: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    target: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    param: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    angle: Option<f64>,
}

impl From<&Gate> for RawGate {
    fn from(g: &Gate) -> Self {
        let mut raw = RawGate {
            gate: String::new(),
            qubit: None,
            control: None,
            target: None,
            param: None,
            angle: None,
        };
        match *g {
            Gate::Rotation { axis, qubit, angle } => {
                raw.gate = match axis {
                    Axis::X => "rx",
                    Axis::Y => "ry",
                    Axis::Z => "rz",
                }
                .into();
                raw.qubit = Some(qubit);
                match angle {
                    Angle::Param(k) => raw.param = Some(k),
                    Angle::Fixed(a) => raw.angle = Some(a),
                }
            }
            Gate::Cnot { control, target } => {
                raw.gate = "cnot".into();
                raw.control = Some(control);
                raw.target = Some(target);
            }
            Gate::H { qubit } => {
                raw.gate = "h".into();
                raw.qubit = Some(qubit);
            }
            Gate::Sdg { qubit } => {
                raw.gate = "sdg".into();
                raw.qubit = Some(qubit);
            }
        }
        raw
    }
}

impl RawGate {
    fn into_gate(self, index: usize) -> Result<Gate> {
        let loc = format!("gates[{index}]");
        let need = |v: Option<usize>, field: &str| {
            v.ok_or_else(|| Error::parse(loc.clone(), format!("missing field `{field}`")))
        };
        let gate = self.gate.to_ascii_lowercase();
        let axis = match gate.as_str() {
            "rx" => Some(Axis::X),
            "ry" => Some(Axis::Y),
            "rz" => Some(Axis::Z),
            _ => None,
        };
        if let Some(axis) = axis {
            let angle = match (self.param, self.angle) {
                (Some(k), None) => Angle::Param(k),
                (None, Some(a)) => Angle::Fixed(a),
                _ => return Err(Error::parse(loc, "rotation needs exactly one of `param` or `angle`")),
            };
            return Ok(Gate::Rotation {
                axis,
                qubit: need(self.qubit, "qubit")?,
                angle,
            });
        }
        if self.param.is_some() || self.angle.is_some() {
            return Err(Error::UnsupportedAnsatz(format!(
                "{loc}: gate `{}` cannot carry a parameter",
                self.gate
            )));
        }
        match gate.as_str() {
            "cnot" | "cx" => Ok(Gate::Cnot {
                control: need(self.control, "control")?,
                target: need(self.target, "target")?,
            }),
            "h" => Ok(Gate::H {
                qubit: need(self.qubit, "qubit")?,
            }),
            "sdg" => Ok(Gate::Sdg {
                qubit: need(self.qubit, "qubit")?,
            }),
            other => Err(Error::parse(loc, format!("unknown gate `{other}`"))),
        }
    }
}

pub fn parse_circuit(text: &str) -> Result<AnsatzCircuit> {
    let raw: RawCircuit = toml::from_str(text).map_err(|e| crate::error::toml_error(text, e))?;
    let gates = raw
        .gates
        .into_iter()
        .enumerate()
        .map(|(i, g)| g.into_gate(i))
        .collect::<Result<Vec<_>>>()?;
    AnsatzCircuit::new(raw.name, raw.n_qubits, raw.n_params, raw.reference_state, gates)
}

pub fn load_circuit(path: &std::path::Path) -> Result<AnsatzCircuit> {
    parse_circuit(&crate::error::read_to_string(path)?)
}

/// Default layouts shipped under `data/ansatz/`.
pub mod presets {
    use super::*;

    /// RY on both qubits, then a CNOT controlled by the qubit that is empty in
    /// the Hartree-Fock reference, so `theta = 0` is the reference itself.
    pub fn h2() -> AnsatzCircuit {
        AnsatzCircuit::new(
            "h2-hardware-efficient",
            2,
            2,
            1,
            vec![Gate::ry(0, 0), Gate::ry(1, 1), Gate::cnot(1, 0)],
        )
        .expect("valid preset")
    }

    /// Three-parameter RY / entangler / RY stand-in for a UCCSD circuit.
    pub fn heh_plus() -> AnsatzCircuit {
        AnsatzCircuit::new(
            "hehp-ry-entangler",
            2,
            3,
            1,
            vec![Gate::ry(0, 0), Gate::ry(1, 1), Gate::cnot(1, 0), Gate::ry(0, 2)],
        )
        .expect("valid preset")
    }

    /// Two layers of per-qubit RY, separated by a linear CNOT chain.
    pub fn lih() -> AnsatzCircuit {
        let mut gates: Vec<Gate> = (0..4).map(|q| Gate::ry(q, q)).collect();
        gates.extend((0..3).map(|q| Gate::cnot(q, q + 1)));
        gates.extend((0..4).map(|q| Gate::ry(q, 4 + q)));
        AnsatzCircuit::new("lih-two-layer-ry", 4, 8, 3, gates).expect("valid preset")
    }

    /// Two depth blocks of per-qubit RY and RZ, each followed by all-to-all CNOTs.
    pub fn beh2() -> AnsatzCircuit {
        let n = 6;
        let mut gates = Vec::new();
        for block in 0..2 {
            let base = block * 2 * n;
            gates.extend((0..n).map(|q| Gate::ry(q, base + q)));
            gates.extend((0..n).map(|q| Gate::rz(q, base + n + q)));
            for a in 0..n {
                for b in a + 1..n {
                    gates.push(Gate::cnot(a, b));
                }
            }
        }
        AnsatzCircuit::new("beh2-full-2-depth-ryrz", n, 24, 9, gates).expect("valid preset")
    }

    pub fn all() -> Vec<(&'static str, AnsatzCircuit)> {
        vec![("h2", h2()), ("hehplus", heh_plus()), ("lih", lih()), ("beh2", beh2())]
    }
}

//! Qubit Hamiltonians as weighted sums of Pauli strings.
//!
//! Letter `i` of a Pauli string acts on qubit `i`, and qubit `i` is bit `i`
//! of a computational-basis index. The fixture format is TOML:
//!
//! ```toml
//! molecule = "H2"
//! bond_length_angstrom = 1.75
//! n_qubits = 2
//! source = "..."
//! terms = [
//!     [-6.6609231016670756e-01, "II"],
//!     [2.4507502046287882e-01, "XX"],
//! ]
//! ```

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Deserialize;

use crate::error::{Error, Result};

/// Largest system [`Hamiltonian::exact_ground_energy`] will diagonalize.
pub const MAX_DENSE_QUBITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Option<Pauli> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// A tensor product of single-qubit Paulis, one letter per qubit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString(Vec<Pauli>);

impl PauliString {
    pub fn new(ops: Vec<Pauli>) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::Contract("Pauli string must act on at least one qubit".into()));
        }
        Ok(PauliString(ops))
    }

    pub fn identity(n_qubits: usize) -> Self {
        PauliString(vec![Pauli::I; n_qubits.max(1)])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ops(&self) -> &[Pauli] {
        &self.0
    }

    pub fn get(&self, qubit: usize) -> Pauli {
        self.0[qubit]
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&p| p == Pauli::I)
    }

    /// Qubitwise commutation: on every qubit the letters agree or one is `I`.
    pub fn qubitwise_commutes(&self, other: &PauliString) -> bool {
        self.0
            .iter()
            .zip(&other.0)
            .all(|(&a, &b)| a == Pauli::I || b == Pauli::I || a == b)
    }

    /// Bits where the operator flips the basis state (X or Y).
    pub fn x_mask(&self) -> usize {
        self.mask(|p| matches!(p, Pauli::X | Pauli::Y))
    }

    /// Bits that contribute a sign (Z or Y).
    pub fn z_mask(&self) -> usize {
        self.mask(|p| matches!(p, Pauli::Z | Pauli::Y))
    }

    /// Bits where the letter is not `I`.
    pub fn support_mask(&self) -> usize {
        self.mask(|p| p != Pauli::I)
    }

    pub fn y_count(&self) -> usize {
        self.0.iter().filter(|&&p| p == Pauli::Y).count()
    }

    fn mask(&self, pred: impl Fn(Pauli) -> bool) -> usize {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &p)| pred(p))
            .fold(0, |m, (q, _)| m | (1 << q))
    }

    /// `P|b> = phase * |b ^ x_mask>`; returns the phase for basis index `b`.
    pub(crate) fn phase_on(&self, basis: usize) -> Complex64 {
        let sign = if (basis & self.z_mask()).count_ones() % 2 == 1 {
            -1.0
        } else {
            1.0
        };
        let i_pow = match self.y_count() % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        i_pow * sign
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let ops = s
            .chars()
            .map(|c| {
                Pauli::from_char(c)
                    .ok_or_else(|| Error::parse(format!("\"{s}\""), format!("invalid Pauli letter '{c}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        PauliString::new(ops)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.0 {
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coefficient: f64,
    pub string: PauliString,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Metadata {
    pub molecule: String,
    pub bond_length_angstrom: f64,
    pub source: String,
}

/// A validated Pauli-sum Hamiltonian with merged duplicate terms.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    n_qubits: usize,
    terms: Vec<Term>,
    pub metadata: Metadata,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHamiltonian {
    molecule: String,
    bond_length_angstrom: f64,
    n_qubits: usize,
    source: String,
    terms: Vec<(f64, String)>,
}

impl Hamiltonian {
    /// Builds a Hamiltonian from `(coefficient, letters)` pairs, merging duplicates.
    pub fn from_terms<S: AsRef<str>>(n_qubits: usize, terms: &[(f64, S)]) -> Result<Self> {
        let parsed = terms
            .iter()
            .enumerate()
            .map(|(i, (c, s))| {
                let string = s.as_ref().parse::<PauliString>().map_err(|e| relocate(e, i))?;
                Ok(Term {
                    coefficient: *c,
                    string,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(n_qubits, parsed, Metadata::default())
    }

    pub fn new(n_qubits: usize, terms: Vec<Term>, metadata: Metadata) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::parse("n_qubits", "must be positive"));
        }
        if n_qubits >= usize::BITS as usize {
            return Err(Error::parse("n_qubits", "too many qubits for a basis index"));
        }
        let mut merged: Vec<Term> = Vec::with_capacity(terms.len());
        for (i, term) in terms.into_iter().enumerate() {
            if term.string.len() != n_qubits {
                return Err(Error::parse(
                    format!("terms[{i}]"),
                    format!(
                        "Pauli string \"{}\" has length {}, expected {n_qubits}",
                        term.string,
                        term.string.len()
                    ),
                ));
            }
            if !term.coefficient.is_finite() {
                return Err(Error::parse(
                    format!("terms[{i}]"),
                    format!("non-finite coefficient {}", term.coefficient),
                ));
            }
            match merged.iter_mut().find(|t| t.string == term.string) {
                Some(existing) => existing.coefficient += term.coefficient,
                None => merged.push(term),
            }
        }
        Ok(Hamiltonian {
            n_qubits,
            terms: merged,
            metadata,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// Sum of coefficients of all-identity terms.
    pub fn identity_constant(&self) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.string.is_identity())
            .map(|t| t.coefficient)
            .sum()
    }

    /// Serializes to the fixture format. Output is a pure function of the value.
    pub fn to_toml_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("molecule = {}\n", toml_str(&self.metadata.molecule)));
        out.push_str(&format!(
            "bond_length_angstrom = {}\n",
            toml_float(self.metadata.bond_length_angstrom)
        ));
        out.push_str(&format!("n_qubits = {}\n", self.n_qubits));
        out.push_str(&format!("source = {}\n", toml_str(&self.metadata.source)));
        out.push_str("terms = [\n");
        for t in &self.terms {
            out.push_str(&format!("    [{:.16e}, \"{}\"],\n", t.coefficient, t.string));
        }
        out.push_str("]\n");
        out
    }

    /// Dense `2^n x 2^n` matrix of the Pauli sum.
    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        self.check_dense()?;
        let dim = self.dim();
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for term in &self.terms {
            let x = term.string.x_mask();
            for b in 0..dim {
                m[(b ^ x, b)] += term.string.phase_on(b) * term.coefficient;
            }
        }
        Ok(m)
    }

    /// Minimum eigenvalue of the dense matrix.
    pub fn exact_ground_energy(&self) -> Result<f64> {
        self.check_dense()?;
        let dense = self.to_dense()?;
        let min = if self.terms.iter().all(|t| t.string.y_count() % 2 == 0) {
            // even Y count: the matrix is real symmetric
            let real = dense.map(|z| z.re);
            real.symmetric_eigenvalues().min()
        } else {
            dense.symmetric_eigenvalues().min()
        };
        Ok(min)
    }

    fn check_dense(&self) -> Result<()> {
        if self.n_qubits > MAX_DENSE_QUBITS {
            return Err(Error::TooManyQubits {
                n_qubits: self.n_qubits,
                limit: MAX_DENSE_QUBITS,
            });
        }
        Ok(())
    }
}

fn relocate(err: Error, index: usize) -> Error {
    match err {
        Error::Parse { location, message } => Error::parse(format!("terms[{index}] {location}"), message),
        other => other,
    }
}

fn toml_str(s: &str) -> String {
    toml::Value::String(s.to_owned()).to_string()
}

fn toml_float(x: f64) -> String {
    toml::Value::Float(x).to_string()
}

impl FromStr for Hamiltonian {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_hamiltonian(s)
    }
}

/// Parses and validates a Hamiltonian fixture document.
pub fn parse_hamiltonian(text: &str) -> Result<Hamiltonian> {
    let raw: RawHamiltonian = toml::from_str(text).map_err(|e| crate::error::toml_error(text, e))?;
    if !raw.bond_length_angstrom.is_finite() {
        return Err(Error::parse("bond_length_angstrom", "must be finite"));
    }
    let terms = raw
        .terms
        .iter()
        .enumerate()
        .map(|(i, (c, s))| {
            Ok(Term {
                coefficient: *c,
                string: s.parse().map_err(|e| relocate(e, i))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Hamiltonian::new(
        raw.n_qubits,
        terms,
        Metadata {
            molecule: raw.molecule,
            bond_length_angstrom: raw.bond_length_angstrom,
            source: raw.source,
        },
    )
}

pub fn load_hamiltonian(path: &std::path::Path) -> Result<Hamiltonian> {
    let text = crate::error::read_to_string(path)?;
    parse_hamiltonian(&text).map_err(|e| match e {
        Error::Parse { location, message } => Error::parse(format!("{}: {location}", path.display()), message),
        other => other,
    })
}

/// A set of qubitwise-commuting terms measured together in one rotated basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clique {
    /// Indices into [`Hamiltonian::terms`].
    pub terms: Vec<usize>,
    /// Per-qubit measurement basis; always `X`, `Y` or `Z`.
    pub basis: Vec<Pauli>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliquePartition {
    pub cliques: Vec<Clique>,
    /// Indices of all-identity terms, handled analytically.
    pub identity_terms: Vec<usize>,
}

impl CliquePartition {
    pub fn len(&self) -> usize {
        self.cliques.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cliques.is_empty()
    }

    pub fn to_text(&self, hamiltonian: &Hamiltonian) -> String {
        let mut out = String::new();
        for (i, clique) in self.cliques.iter().enumerate() {
            let basis: String = clique.basis.iter().map(|p| p.as_char()).collect();
            let members: Vec<String> = clique
                .terms
                .iter()
                .map(|&t| hamiltonian.terms()[t].string.to_string())
                .collect();
            out.push_str(&format!("clique {i} basis {basis}: {}\n", members.join(" ")));
        }
        out
    }
}

/// Greedy first-fit qubitwise-commuting grouping.
///
/// Terms are visited by descending `|coefficient|` (ties by original index);
/// each joins the first clique whose accumulated basis it is compatible with.
pub fn group_cliques(hamiltonian: &Hamiltonian) -> CliquePartition {
    let terms = hamiltonian.terms();
    let mut order: Vec<usize> = (0..terms.len()).collect();
    order.sort_by(|&a, &b| {
        terms[b]
            .coefficient
            .abs()
            .total_cmp(&terms[a].coefficient.abs())
            .then(a.cmp(&b))
    });

    let mut identity_terms = Vec::new();
    let mut groups: Vec<(Vec<usize>, Vec<Pauli>)> = Vec::new();
    for idx in order {
        let string = &terms[idx].string;
        if string.is_identity() {
            identity_terms.push(idx);
            continue;
        }
        let slot = groups.iter_mut().find(|(_, basis)| {
            basis
                .iter()
                .zip(string.ops())
                .all(|(&b, &p)| p == Pauli::I || b == Pauli::I || b == p)
        });
        match slot {
            Some((members, basis)) => {
                members.push(idx);
                for (b, &p) in basis.iter_mut().zip(string.ops()) {
                    if p != Pauli::I {
                        *b = p;
                    }
                }
            }
            None => groups.push((vec![idx], string.ops().to_vec())),
        }
    }
    identity_terms.sort_unstable();

    let cliques = groups
        .into_iter()
        .map(|(terms, basis)| Clique {
            terms,
            basis: basis
                .into_iter()
                .map(|p| if p == Pauli::I { Pauli::Z } else { p })
                .collect(),
        })
        .collect();
    CliquePartition {
        cliques,
        identity_terms,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn strings(h: &Hamiltonian, clique: &Clique) -> Vec<String> {
        clique.terms.iter().map(|&t| h.terms()[t].string.to_string()).collect()
    }

    #[test]
    fn merges_duplicate_terms() {
        let h = Hamiltonian::from_terms(2, &[(0.5, "ZI"), (0.5, "ZI")]).unwrap();
        assert_eq!(h.terms().len(), 1);
        assert_eq!(h.terms()[0].coefficient, 1.0);
        assert_eq!(h.terms()[0].string.to_string(), "ZI");
    }

    #[test]
    fn rejects_bad_letter() {
        let doc =
            "molecule = \"x\"\nbond_length_angstrom = 1.0\nn_qubits = 2\nsource = \"t\"\nterms = [[1.0, \"ZA\"]]\n";
        let err = parse_hamiltonian(doc).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("invalid Pauli letter"), "{msg}");
        assert!(msg.contains("terms[0]"), "{msg}");
    }

    #[test]
    fn rejects_inconsistent_lengths() {
        let err = Hamiltonian::from_terms(2, &[(1.0, "Z"), (1.0, "ZZ")]).unwrap_err();
        assert!(err.to_string().contains("terms[0]"));
    }

    #[test]
    fn rejects_non_finite() {
        let err = Hamiltonian::from_terms(1, &[(f64::NAN, "Z")]).unwrap_err();
        assert!(err.to_string().contains("non-finite"));
        let doc =
            "molecule = \"x\"\nbond_length_angstrom = 1.0\nn_qubits = 1\nsource = \"t\"\nterms = [[inf, \"Z\"]]\n";
        assert!(matches!(parse_hamiltonian(doc), Err(Error::Parse { .. })));
    }

    #[test]
    fn syntax_error_names_line() {
        let doc =
            "molecule = \"x\"\nbond_length_angstrom = 1.0\nn_qubits = 2\nsource = \"t\"\nterms = [[1.0 \"ZZ\"]]\n";
        let msg = parse_hamiltonian(doc).unwrap_err().to_string();
        assert!(msg.contains("line 5"), "{msg}");
    }

    #[test]
    fn grouping_examples() {
        let h = Hamiltonian::from_terms(2, &[(0.3, "ZI"), (0.2, "IZ"), (0.1, "ZZ"), (0.25, "XX")]).unwrap();
        let p = group_cliques(&h);
        assert_eq!(p.len(), 2);
        let mut a = strings(&h, &p.cliques[0]);
        a.sort();
        assert_eq!(a, ["IZ", "ZI", "ZZ"]);
        assert_eq!(strings(&h, &p.cliques[1]), ["XX"]);

        let h = Hamiltonian::from_terms(2, &[(1.0, "ZZ")]).unwrap();
        assert_eq!(group_cliques(&h).len(), 1);

        let h = Hamiltonian::from_terms(2, &[(0.4, "XI"), (0.3, "IX"), (0.2, "XX"), (0.1, "YY")]).unwrap();
        let p = group_cliques(&h);
        assert_eq!(p.len(), 2);
        assert_eq!(strings(&h, &p.cliques[0]), ["XI", "IX", "XX"]);
        assert_eq!(strings(&h, &p.cliques[1]), ["YY"]);
        assert_eq!(p.cliques[1].basis, vec![Pauli::Y, Pauli::Y]);
    }

    #[test]
    fn identity_goes_to_no_clique() {
        let h = Hamiltonian::from_terms(2, &[(-1.0, "II"), (0.5, "ZI")]).unwrap();
        let p = group_cliques(&h);
        assert_eq!(p.identity_terms, vec![0]);
        assert_eq!(p.len(), 1);
        assert_eq!(p.cliques[0].basis, vec![Pauli::Z, Pauli::Z]);
        assert_eq!(h.identity_constant(), -1.0);
    }

    #[test]
    fn ground_energy_examples() {
        let h = Hamiltonian::from_terms(1, &[(1.0, "Z")]).unwrap();
        assert!((h.exact_ground_energy().unwrap() + 1.0).abs() < 1e-12);
        let h = Hamiltonian::from_terms(2, &[(0.5, "II"), (0.5, "ZZ")]).unwrap();
        assert!(h.exact_ground_energy().unwrap().abs() < 1e-12);
        // complex Hermitian path: X + Y has eigenvalues +-sqrt(2)
        let h = Hamiltonian::from_terms(1, &[(1.0, "X"), (1.0, "Y")]).unwrap();
        assert!((h.exact_ground_energy().unwrap() + 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn dense_limit_is_enforced() {
        let h = Hamiltonian::from_terms(13, &[(1.0, "ZIIIIIIIIIIII")]).unwrap();
        assert!(matches!(h.exact_ground_energy(), Err(Error::TooManyQubits { .. })));
    }

    #[test]
    fn serialization_round_trips() {
        let doc = "molecule = \"H2\"\nbond_length_angstrom = 0.75\nn_qubits = 2\nsource = \"unit test\"\nterms = [\n    [0.1, \"ZI\"],\n    [-0.3333333333333333, \"XX\"],\n]\n";
        let h = parse_hamiltonian(doc).unwrap();
        let text = h.to_toml_string();
        assert!(text.contains("-3.3333333333333331e-1"), "{text}");
        let again = parse_hamiltonian(&text).unwrap();
        assert_eq!(again, h);
        assert_eq!(again.to_toml_string(), text);
    }

    fn naive_dense(h: &Hamiltonian) -> DMatrix<Complex64> {
        let z = Complex64::new(0.0, 0.0);
        let o = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let single = |p: Pauli| match p {
            Pauli::I => DMatrix::from_row_slice(2, 2, &[o, z, z, o]),
            Pauli::X => DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
            Pauli::Y => DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
            Pauli::Z => DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        };
        let dim = h.dim();
        let mut total = DMatrix::<Complex64>::zeros(dim, dim);
        for t in h.terms() {
            // qubit 0 is the least significant bit, so it is the last Kronecker factor
            let mut m = DMatrix::from_element(1, 1, o);
            for &p in t.string.ops().iter().rev() {
                m = m.kronecker(&single(p));
            }
            total += m * Complex64::new(t.coefficient, 0.0);
        }
        total
    }

    fn arb_hamiltonian(max_qubits: usize) -> impl Strategy<Value = Hamiltonian> {
        (1..=max_qubits).prop_flat_map(|n| {
            prop::collection::vec((-2.0f64..2.0, prop::collection::vec(0u8..4, n)), 1..12).prop_map(move |ts| {
                let terms: Vec<Term> = ts
                    .into_iter()
                    .map(|(c, ops)| Term {
                        coefficient: c,
                        string: PauliString::new(
                            ops.into_iter()
                                .map(|k| [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][k as usize])
                                .collect(),
                        )
                        .unwrap(),
                    })
                    .collect();
                Hamiltonian::new(n, terms, Metadata::default()).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn dense_matches_kronecker_builder(h in arb_hamiltonian(4)) {
            let fast = h.to_dense().unwrap();
            let slow = naive_dense(&h);
            prop_assert!((fast - slow).norm() < 1e-12);
        }

        #[test]
        fn partition_is_valid(h in arb_hamiltonian(5)) {
            let p = group_cliques(&h);
            let mut seen = vec![0usize; h.terms().len()];
            for clique in &p.cliques {
                for &a in &clique.terms {
                    seen[a] += 1;
                    for &b in &clique.terms {
                        prop_assert!(h.terms()[a].string.qubitwise_commutes(&h.terms()[b].string));
                    }
                }
                for q in 0..h.n_qubits() {
                    let letters: Vec<Pauli> = clique
                        .terms
                        .iter()
                        .map(|&t| h.terms()[t].string.get(q))
                        .filter(|&l| l != Pauli::I)
                        .collect();
                    let expected = letters.first().copied().unwrap_or(Pauli::Z);
                    prop_assert_eq!(clique.basis[q], expected);
                }
            }
            for (i, t) in h.terms().iter().enumerate() {
                let expected = if t.string.is_identity() { 0 } else { 1 };
                prop_assert_eq!(seen[i], expected);
                prop_assert_eq!(p.identity_terms.contains(&i), t.string.is_identity());
            }
        }

        #[test]
        fn grouping_and_serialization_are_deterministic(h in arb_hamiltonian(3)) {
            let text = h.to_toml_string();
            let a = parse_hamiltonian(&text).unwrap();
            let b = parse_hamiltonian(&text).unwrap();
            prop_assert_eq!(a.to_toml_string(), b.to_toml_string());
            prop_assert_eq!(group_cliques(&a), group_cliques(&b));
        }
    }
}

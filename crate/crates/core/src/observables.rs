//! Canonical observable sets for N qubits.

use num_complex::Complex64 as C64;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, kron, pauli, ComplexMatrix, HermitianOperator, LabeledMatrixJson};
use crate::states::DensityMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableKind {
    Pauli,
    Sic,
    Custom,
}

impl std::str::FromStr for ObservableKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pauli" => Ok(Self::Pauli),
            "sic" => Ok(Self::Sic),
            "custom" => Ok(Self::Custom),
            other => Err(Error::Config(format!("unknown observable kind '{other}'"))),
        }
    }
}

impl std::fmt::Display for ObservableKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Pauli => "pauli",
            Self::Sic => "sic",
            Self::Custom => "custom",
        })
    }
}

/// Ordered list of observables sharing one dimension, with unique labels.
#[derive(Debug, Clone)]
pub struct ObservableSet {
    observables: Vec<HermitianOperator>,
    kind: ObservableKind,
    n_qubits: usize,
}

impl ObservableSet {
    pub fn new(observables: Vec<HermitianOperator>, kind: ObservableKind, n_qubits: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if let Some(op) = observables.iter().find(|o| o.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: op.dim(),
            });
        }
        let mut labels: Vec<&str> = observables.iter().map(|o| o.label()).collect();
        labels.sort_unstable();
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(format!("duplicate label '{}'", w[0])));
        }
        Ok(Self {
            observables,
            kind,
            n_qubits,
        })
    }

    pub fn observables(&self) -> &[HermitianOperator] {
        &self.observables
    }

    pub fn into_observables(self) -> Vec<HermitianOperator> {
        self.observables
    }

    pub fn kind(&self) -> ObservableKind {
        self.kind
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.observables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observables.is_empty()
    }

    pub fn get(&self, label: &str) -> Option<&HermitianOperator> {
        self.observables.iter().find(|o| o.label() == label)
    }

    /// Order-preserving selection by index.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            observables: indices.iter().map(|&i| self.observables[i].clone()).collect(),
            kind: self.kind,
            n_qubits: self.n_qubits,
        }
    }

    pub fn shuffled<R: Rng + ?Sized>(&self, rng: &mut R) -> Self {
        let mut observables = self.observables.clone();
        observables.shuffle(rng);
        Self {
            observables,
            kind: self.kind,
            n_qubits: self.n_qubits,
        }
    }

    pub fn to_json(&self) -> ObservableSetJson {
        ObservableSetJson {
            kind: self.kind,
            n_qubits: self.n_qubits,
            observables: self.observables.iter().map(LabeledMatrixJson::from).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObservableSetJson {
    pub kind: ObservableKind,
    pub n_qubits: usize,
    pub observables: Vec<LabeledMatrixJson>,
}

const PAULI_CHARS: [char; 4] = ['I', 'X', 'Y', 'Z'];

/// Digits of `index` in base 4, most significant (qubit 1) first.
fn base4_digits(mut index: usize, n_qubits: usize) -> Vec<usize> {
    let mut digits = vec![0; n_qubits];
    for d in digits.iter_mut().rev() {
        *d = index % 4;
        index /= 4;
    }
    digits
}

fn tensor_product(factors: impl IntoIterator<Item = ComplexMatrix>) -> ComplexMatrix {
    factors
        .into_iter()
        .reduce(|acc, f| kron(&acc, &f))
        .expect("at least one factor")
}

fn check_qubits(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > 12 {
        return Err(Error::InvalidArgument(format!("unsupported qubit count {n_qubits}")));
    }
    Ok(())
}

/// The Pauli string with the given per-qubit indices (0..=3 for I, X, Y, Z).
pub fn pauli_string(indices: &[usize]) -> HermitianOperator {
    let label: String = indices.iter().map(|&k| PAULI_CHARS[k]).collect();
    HermitianOperator::from_hermitian_part(
        tensor_product(indices.iter().map(|&k| pauli::sigma(k))),
        label,
    )
}

/// Looks up a Pauli string by label, e.g. `"XIZ"`.
pub fn pauli_from_label(label: &str) -> Result<HermitianOperator> {
    let indices = label
        .chars()
        .map(|c| {
            PAULI_CHARS
                .iter()
                .position(|&p| p == c.to_ascii_uppercase())
                .ok_or_else(|| Error::InvalidArgument(format!("bad Pauli label '{label}'")))
        })
        .collect::<Result<Vec<_>>>()?;
    if indices.is_empty() {
        return Err(Error::InvalidArgument("empty Pauli label".into()));
    }
    Ok(pauli_string(&indices))
}

/// All `4^N` Pauli strings including the identity, lexicographic with I < X < Y < Z.
pub fn pauli_basis_with_identity(n_qubits: usize) -> Result<ObservableSet> {
    check_qubits(n_qubits)?;
    let ops = (0..1usize << (2 * n_qubits))
        .map(|i| pauli_string(&base4_digits(i, n_qubits)))
        .collect();
    ObservableSet::new(ops, ObservableKind::Pauli, n_qubits)
}

/// The `4^N − 1` non-identity Pauli strings in lexicographic order.
pub fn pauli_basis(n_qubits: usize) -> Result<ObservableSet> {
    let mut ops = pauli_basis_with_identity(n_qubits)?.into_observables();
    ops.remove(0);
    ObservableSet::new(ops, ObservableKind::Pauli, n_qubits)
}

/// Bloch vectors of the single-qubit tetrahedral SIC.
pub fn sic_bloch_vectors() -> [[f64; 3]; 4] {
    let s2 = 2f64.sqrt();
    [
        [0.0, 0.0, 1.0],
        [2.0 * s2 / 3.0, 0.0, -1.0 / 3.0],
        [-s2 / 3.0, (2.0f64 / 3.0).sqrt(), -1.0 / 3.0],
        [-s2 / 3.0, -(2.0f64 / 3.0).sqrt(), -1.0 / 3.0],
    ]
}

/// Single-qubit SIC elements `E_k = Π_k / 2` with `Π_k = (I + n_k·σ)/2`.
pub fn sic_single_qubit() -> [ComplexMatrix; 4] {
    sic_bloch_vectors().map(|n| {
        let proj = (pauli::id()
            + pauli::x() * C64::new(n[0], 0.0)
            + pauli::y() * C64::new(n[1], 0.0)
            + pauli::z() * C64::new(n[2], 0.0))
            * C64::new(0.5, 0.0);
        proj * C64::new(0.5, 0.0)
    })
}

fn sic_label(digits: &[usize]) -> String {
    let d: String = digits.iter().map(|k| char::from(b'0' + *k as u8)).collect();
    format!("SIC-{d}")
}

/// All `4^N` product SIC elements, lexicographic in the per-qubit index.
pub fn sic_povm_complete(n_qubits: usize) -> Result<ObservableSet> {
    check_qubits(n_qubits)?;
    let single = sic_single_qubit();
    let ops = (0..1usize << (2 * n_qubits))
        .map(|i| {
            let digits = base4_digits(i, n_qubits);
            HermitianOperator::from_hermitian_part(
                tensor_product(digits.iter().map(|&k| single[k].clone())),
                sic_label(&digits),
            )
        })
        .collect();
    ObservableSet::new(ops, ObservableKind::Sic, n_qubits)
}

/// Product SIC-POVM with the all-last-index element dropped, leaving `4^N − 1`
/// linearly independent operators.
pub fn sic_povm(n_qubits: usize) -> Result<ObservableSet> {
    let mut ops = sic_povm_complete(n_qubits)?.into_observables();
    ops.pop();
    ObservableSet::new(ops, ObservableKind::Sic, n_qubits)
}

/// `Tr(ρA)`.
pub fn expectation(rho: &DensityMatrix, a: &HermitianOperator) -> Result<f64> {
    if rho.dim() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            actual: a.dim(),
        });
    }
    Ok(linalg::trace_product_re(rho.matrix(), a.matrix()))
}

//! Symmetry generators and the auxiliary observables `i[Q_k, O_j]`.
//!
//! A state invariant under a group has vanishing expectation for every
//! auxiliary observable built from the group's generators, so the symmetry
//! enters the MaxEnt problem as extra zero-valued constraints.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    self, frobenius_norm, kron, linearly_independent_subset, pauli, ComplexMatrix,
    HermitianOperator, LI_TOL,
};
use crate::observables::{pauli_basis_with_identity, ObservableSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryKind {
    None,
    Permutation,
    Werner,
}

impl std::str::FromStr for SymmetryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(Self::None),
            "permutation" => Ok(Self::Permutation),
            "werner" => Ok(Self::Werner),
            other => Err(Error::Config(format!("unknown symmetry '{other}'"))),
        }
    }
}

impl std::fmt::Display for SymmetryKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::None => "none",
            Self::Permutation => "permutation",
            Self::Werner => "werner",
        })
    }
}

/// A declared symmetry with its generators and the independent auxiliary
/// observables derived from them.
#[derive(Debug, Clone)]
pub struct SymmetryGroupSpec {
    pub kind: SymmetryKind,
    pub n_qubits: usize,
    pub generators: Vec<HermitianOperator>,
    pub auxiliary: Vec<HermitianOperator>,
}

impl SymmetryGroupSpec {
    /// Builds generators and auxiliaries against the full Pauli basis (identity included).
    pub fn build(kind: SymmetryKind, n_qubits: usize) -> Result<Self> {
        let generators = generators(kind, n_qubits)?;
        let basis = pauli_basis_with_identity(n_qubits)?;
        let auxiliary = auxiliary_from_generators(&generators, basis.observables(), n_qubits)?;
        Ok(Self {
            kind,
            n_qubits,
            generators,
            auxiliary,
        })
    }
}

pub fn generators(kind: SymmetryKind, n_qubits: usize) -> Result<Vec<HermitianOperator>> {
    match kind {
        SymmetryKind::None => Ok(Vec::new()),
        SymmetryKind::Permutation => permutation_generators(n_qubits),
        SymmetryKind::Werner => werner_generators(n_qubits),
    }
}

fn dim_of(n_qubits: usize) -> Result<usize> {
    if n_qubits == 0 || n_qubits > 12 {
        return Err(Error::InvalidArgument(format!("unsupported qubit count {n_qubits}")));
    }
    Ok(1usize << n_qubits)
}

/// `V_π` for `perm` a permutation of `0..N`: the tensor factor at position
/// `q` is moved to position `perm[q]`. Qubit 1 is the most significant bit.
pub fn permutation_matrix(n_qubits: usize, perm: &[usize]) -> Result<ComplexMatrix> {
    let dim = dim_of(n_qubits)?;
    let mut seen = vec![false; n_qubits];
    if perm.len() != n_qubits || perm.iter().any(|&p| p >= n_qubits || std::mem::replace(&mut seen[p], true)) {
        return Err(Error::InvalidArgument(format!("{perm:?} is not a permutation of 0..{n_qubits}")));
    }
    let mut m = ComplexMatrix::zeros(dim, dim);
    let bit = |b: usize, q: usize| (b >> (n_qubits - 1 - q)) & 1;
    for x in 0..dim {
        let y = (0..n_qubits).fold(0usize, |acc, q| acc | (bit(x, q) << (n_qubits - 1 - perm[q])));
        m[(y, x)] = C64::new(1.0, 0.0);
    }
    Ok(m)
}

/// `P_ij`, swapping tensor factors `i` and `j` (1-based, `i < j`).
pub fn permutation_operator(n_qubits: usize, i: usize, j: usize) -> Result<HermitianOperator> {
    if i == 0 || j > n_qubits || i >= j {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= i < j <= {n_qubits}, got i={i}, j={j}"
        )));
    }
    let mut perm: Vec<usize> = (0..n_qubits).collect();
    perm.swap(i - 1, j - 1);
    Ok(HermitianOperator::from_hermitian_part(
        permutation_matrix(n_qubits, &perm)?,
        format!("P{i}{j}"),
    ))
}

/// `[P_12, P_13, …, P_1N]`.
pub fn permutation_generators(n_qubits: usize) -> Result<Vec<HermitianOperator>> {
    if n_qubits < 2 {
        return Err(Error::InvalidArgument(
            "permutation symmetry needs at least 2 qubits".into(),
        ));
    }
    (2..=n_qubits)
        .map(|j| permutation_operator(n_qubits, 1, j))
        .collect()
}

/// `Σ_ℓ σ_k^{(ℓ)}` for `k ∈ {1, 2, 3}`.
///
/// The `k = 0` operator is `N·I` and commutes with everything, so it is left out.
pub fn werner_generators(n_qubits: usize) -> Result<Vec<HermitianOperator>> {
    (1..=3).map(|k| collective_pauli(n_qubits, k)).collect()
}

/// `Σ_ℓ σ_k` acting on qubit `ℓ`, for `k = 0..=3`.
pub fn collective_pauli(n_qubits: usize, k: usize) -> Result<HermitianOperator> {
    let dim = dim_of(n_qubits)?;
    let mut sum = ComplexMatrix::zeros(dim, dim);
    for site in 0..n_qubits {
        let term = (0..n_qubits)
            .map(|q| if q == site { pauli::sigma(k) } else { pauli::id() })
            .reduce(|acc, f| kron(&acc, &f))
            .expect("n_qubits >= 1");
        sum += term;
    }
    let name = ['I', 'X', 'Y', 'Z'][k];
    Ok(HermitianOperator::from_hermitian_part(sum, format!("S{name}")))
}

/// All `i[Q_k, O_j]` for the kind's generators, normalized and reduced to an
/// independent subset.
pub fn auxiliary_observables(
    kind: SymmetryKind,
    n_qubits: usize,
    operator_basis: &[HermitianOperator],
) -> Result<Vec<HermitianOperator>> {
    auxiliary_from_generators(&generators(kind, n_qubits)?, operator_basis, n_qubits)
}

fn auxiliary_from_generators(
    generators: &[HermitianOperator],
    operator_basis: &[HermitianOperator],
    n_qubits: usize,
) -> Result<Vec<HermitianOperator>> {
    let dim = dim_of(n_qubits)?;
    if let Some(op) = operator_basis.iter().chain(generators).find(|o| o.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: op.dim(),
        });
    }
    let basis_mats: Vec<ComplexMatrix> = operator_basis.iter().map(|o| o.matrix().clone()).collect();
    let rank = linearly_independent_subset(&basis_mats, &[], LI_TOL).len();
    if rank != dim * dim {
        return Err(Error::BasisNotSpanning {
            rank,
            expected: dim * dim,
        });
    }

    let i = C64::new(0.0, 1.0);
    let mut candidates = Vec::new();
    for q in generators {
        let scale = q.frobenius_norm();
        for (j, o) in operator_basis.iter().enumerate() {
            let c = linalg::commutator(q, o)? * i;
            let norm = frobenius_norm(&c);
            if norm <= 1e-12 * scale * o.frobenius_norm() {
                continue;
            }
            candidates.push(HermitianOperator::from_hermitian_part(
                c * C64::new(1.0 / norm, 0.0),
                format!("aux-{}-O{}", q.label(), j),
            ));
        }
    }
    let mats: Vec<ComplexMatrix> = candidates.iter().map(|c| c.matrix().clone()).collect();
    let keep = linearly_independent_subset(&mats, &[], LI_TOL);
    Ok(keep.into_iter().map(|k| candidates[k].clone()).collect())
}

/// The candidates that are independent of `aux` and of the candidates kept
/// before them, in their original order.
pub fn filter_measured_observables(
    candidates: &ObservableSet,
    aux: &[HermitianOperator],
) -> Result<ObservableSet> {
    let dim = 1usize << candidates.n_qubits();
    if let Some(op) = aux.iter().find(|o| o.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: op.dim(),
        });
    }
    let mats: Vec<ComplexMatrix> = candidates.observables().iter().map(|o| o.matrix().clone()).collect();
    let seed: Vec<ComplexMatrix> = aux.iter().map(|o| o.matrix().clone()).collect();
    let keep = linearly_independent_subset(&mats, &seed, LI_TOL);
    Ok(candidates.select(&keep))
}

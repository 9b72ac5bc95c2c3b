//! Target states: samplers, named states, white noise and state metrics.

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{
    self, eigh_matrix, flatten, frobenius_norm, unflatten, ComplexMatrix, HermitianOperator,
    OrthoBasis, LI_TOL, PSD_TOL,
};
use crate::symmetry::permutation_matrix;

const TRACE_TOL: f64 = 1e-10;
const NORM_TOL: f64 = 1e-12;

/// Normalized state vector on `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: DVector<C64>,
    n_qubits: usize,
}

impl PureState {
    pub fn new(amplitudes: DVector<C64>, n_qubits: usize) -> Result<Self> {
        check_len(amplitudes.len(), n_qubits)?;
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self {
            amplitudes,
            n_qubits,
        })
    }

    /// Normalizes `amplitudes` (which must be nonzero).
    pub fn normalized(amplitudes: DVector<C64>, n_qubits: usize) -> Result<Self> {
        check_len(amplitudes.len(), n_qubits)?;
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self {
            amplitudes: amplitudes / C64::new(norm, 0.0),
            n_qubits,
        })
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn projector(&self) -> ComplexMatrix {
        &self.amplitudes * self.amplitudes.adjoint()
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix::trusted(self.projector(), self.n_qubits)
    }
}

fn check_len(len: usize, n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits >= usize::BITS as usize {
        return Err(Error::InvalidArgument(format!("invalid qubit count {n_qubits}")));
    }
    let dim = 1usize << n_qubits;
    if len != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: len,
        });
    }
    Ok(())
}

/// Trace-one positive semidefinite operator on `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    op: HermitianOperator,
    n_qubits: usize,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace (within 1e-10) and positivity (eigenvalues ≥ −1e-10).
    pub fn new(matrix: ComplexMatrix, n_qubits: usize) -> Result<Self> {
        check_len(matrix.nrows(), n_qubits)?;
        let op = HermitianOperator::new(matrix, "rho")?;
        let trace = linalg::trace(op.matrix()).re;
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::BadTrace { trace });
        }
        let min = eigh_matrix(op.matrix())?.values.min();
        if min < -PSD_TOL {
            return Err(Error::NotPositive { min_eigenvalue: min });
        }
        Ok(Self { op, n_qubits })
    }

    /// For matrices that are valid by construction; only symmetrizes.
    pub(crate) fn trusted(matrix: ComplexMatrix, n_qubits: usize) -> Self {
        Self {
            op: HermitianOperator::from_hermitian_part(matrix, "rho"),
            n_qubits,
        }
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        Self::trusted(
            linalg::identity(dim) * C64::new(1.0 / dim as f64, 0.0),
            n_qubits,
        )
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        self.op.matrix()
    }

    pub fn as_operator(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    /// Convex combination `(1 − w)·self + w·other`.
    pub fn mix(&self, other: &DensityMatrix, w: f64) -> Result<DensityMatrix> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::InvalidArgument(format!("mixing weight {w} outside [0, 1]")));
        }
        Ok(Self::trusted(
            self.matrix() * C64::new(1.0 - w, 0.0) + other.matrix() * C64::new(w, 0.0),
            self.n_qubits,
        ))
    }
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Haar-random pure state: i.i.d. complex Gaussian amplitudes, normalized.
pub fn haar_pure<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Result<PureState> {
    check_len(1usize << n_qubits.min(63), n_qubits)?;
    let dim = 1usize << n_qubits;
    let amps = DVector::from_iterator(dim, (0..dim).map(|_| complex_gaussian(rng)));
    PureState::normalized(amps, n_qubits)
}

/// Haar-random pure state in the symmetric subspace, drawn as Gaussian
/// coefficients over the `N + 1` Dicke states.
pub fn haar_symmetric_pure<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Result<PureState> {
    check_len(1usize << n_qubits.min(63), n_qubits)?;
    let dim = 1usize << n_qubits;
    let mut amps = DVector::<C64>::zeros(dim);
    for k in 0..=n_qubits {
        let coeff = complex_gaussian(rng);
        amps += dicke(n_qubits, k)?.amplitudes() * coeff;
    }
    PureState::normalized(amps, n_qubits)
}

/// Orthonormal basis (flattened) of `span{V_π : π ∈ S_N}`.
fn permutation_span_basis(n_qubits: usize) -> OrthoBasis {
    let mut basis = OrthoBasis::default();
    let dim = 1usize << n_qubits;
    for perm in permutations(n_qubits) {
        let v = permutation_matrix(n_qubits, &perm).expect("valid permutation");
        basis.try_push(flatten(&v), LI_TOL, (dim as f64).sqrt());
    }
    basis
}

/// Number of linearly independent permutation operators `V_π` on `N` qubits.
pub fn permutation_span_dimension(n_qubits: usize) -> usize {
    permutation_span_basis(n_qubits).len()
}

pub(crate) fn permutations(n: usize) -> Vec<Vec<usize>> {
    use itertools::Itertools;
    (0..n).permutations(n).collect()
}

/// Projection onto the commutant of the collective unitaries `U^{⊗N}`.
///
/// The commutant is `span{V_π}`, so the twirl is the Hilbert–Schmidt
/// orthogonal projection onto that span.
pub fn twirl(rho: &DensityMatrix, n_qubits: usize) -> Result<DensityMatrix> {
    check_len(rho.dim(), n_qubits)?;
    let basis = permutation_span_basis(n_qubits);
    let v = flatten(rho.matrix());
    let mut out = vec![C64::new(0.0, 0.0); v.len()];
    for q in basis.vectors() {
        let c: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
        for (o, x) in out.iter_mut().zip(q) {
            *o += c * x;
        }
    }
    Ok(DensityMatrix::trusted(unflatten(&out, rho.dim()), n_qubits))
}

/// Hilbert–Schmidt-random density matrix `GG†/Tr(GG†)` for a complex Ginibre `G`.
pub fn hilbert_schmidt_random<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Result<DensityMatrix> {
    check_len(1usize << n_qubits.min(63), n_qubits)?;
    let dim = 1usize << n_qubits;
    let g = ComplexMatrix::from_fn(dim, dim, |_, _| complex_gaussian(rng));
    let m = &g * g.adjoint();
    let tr = linalg::trace(&m).re;
    Ok(DensityMatrix::trusted(m * C64::new(1.0 / tr, 0.0), n_qubits))
}

/// Random Werner state: the twirl of a Hilbert–Schmidt-random density matrix.
pub fn random_werner<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Result<DensityMatrix> {
    let rho = hilbert_schmidt_random(n_qubits, rng)?;
    twirl(&rho, n_qubits)
}

/// `(|0…0⟩ + |1…1⟩)/√2`.
pub fn ghz(n_qubits: usize) -> Result<PureState> {
    if n_qubits < 2 {
        return Err(Error::InvalidArgument("GHZ needs at least 2 qubits".into()));
    }
    check_len(1usize << n_qubits.min(63), n_qubits)?;
    let dim = 1usize << n_qubits;
    let mut amps = DVector::<C64>::zeros(dim);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    amps[0] = C64::new(s, 0.0);
    amps[dim - 1] = C64::new(s, 0.0);
    PureState::new(amps, n_qubits)
}

/// Uniform superposition of the basis states with Hamming weight `n_excitations`.
pub fn dicke(n_qubits: usize, n_excitations: usize) -> Result<PureState> {
    check_len(1usize << n_qubits.min(63), n_qubits)?;
    if n_excitations > n_qubits {
        return Err(Error::InvalidArgument(format!(
            "{n_excitations} excitations on {n_qubits} qubits"
        )));
    }
    let dim = 1usize << n_qubits;
    let count = (0..dim)
        .filter(|b| b.count_ones() as usize == n_excitations)
        .count();
    let a = C64::new(1.0 / (count as f64).sqrt(), 0.0);
    let amps = DVector::from_fn(dim, |b, _| {
        if b.count_ones() as usize == n_excitations {
            a
        } else {
            C64::new(0.0, 0.0)
        }
    });
    PureState::normalized(amps, n_qubits)
}

/// `(1 − η)|ψ⟩⟨ψ| + η I/2^N`.
pub fn add_white_noise(psi: &PureState, eta: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidArgument(format!("noise weight {eta} outside [0, 1]")));
    }
    psi.to_density()
        .mix(&DensityMatrix::maximally_mixed(psi.n_qubits()), eta)
}

/// Noise weight giving the requested purity under [`add_white_noise`].
pub fn eta_for_purity(purity_target: f64, n_qubits: usize) -> Result<f64> {
    let d = (1usize << n_qubits) as f64;
    if !(1.0 / d..=1.0).contains(&purity_target) {
        return Err(Error::InvalidArgument(format!(
            "purity {purity_target} outside [1/{d}, 1]"
        )));
    }
    Ok(1.0 - ((purity_target - 1.0 / d) / ((d - 1.0) / d)).sqrt())
}

/// Uhlmann–Jozsa fidelity `Tr √(√ρ σ √ρ)` (not squared).
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            actual: sigma.dim(),
        });
    }
    let s = linalg::psd_sqrtm(rho.matrix())?;
    let m = &s * sigma.matrix() * &s;
    let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    let w = eigh_matrix(&m)?.values;
    let floor = w.amax() * f64::EPSILON * w.len() as f64;
    let f: f64 = w.iter().filter(|&&x| x > floor).map(|&x| x.sqrt()).sum();
    Ok(f.clamp(0.0, 1.0))
}

/// `Tr(ρ²)`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    let n = frobenius_norm(rho.matrix());
    n * n
}

/// `−Tr(ρ ln ρ)` in nats.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    let w = eigh_matrix(rho.matrix()).expect("density matrix is finite").values;
    w.iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum::<f64>()
        .max(0.0)
}

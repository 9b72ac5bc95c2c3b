//! Dense complex-matrix kernel.
//!
//! Everything in the crate works with small dense operators (dimension `2^N`
//! for a handful of qubits), so matrices are plain [`nalgebra::DMatrix`]
//! values over [`Complex64`]. Matrix functions are computed through the
//! Hermitian eigendecomposition.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<C64>;

/// Entrywise tolerance for accepting a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Eigenvalues below this are treated as rounding noise in PSD checks.
pub const PSD_TOL: f64 = 1e-10;

/// Default relative tolerance for linear-independence extraction.
pub const LI_TOL: f64 = 1e-9;

/// A Hermitian operator with a provenance label.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: ComplexMatrix,
    label: String,
}

impl HermitianOperator {
    /// Validates and symmetrizes `matrix`.
    pub fn new(matrix: ComplexMatrix, label: impl Into<String>) -> Result<Self> {
        check_square_finite(&matrix)?;
        let deviation = hermitian_deviation(&matrix);
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self::from_hermitian_part(matrix, label))
    }

    /// Takes the Hermitian part `(M + M†)/2` without checking the deviation.
    pub fn from_hermitian_part(matrix: ComplexMatrix, label: impl Into<String>) -> Self {
        let matrix = (&matrix + matrix.adjoint()) * C64::new(0.5, 0.0);
        Self {
            matrix,
            label: label.into(),
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            matrix: &self.matrix * C64::new(factor, 0.0),
            label: self.label.clone(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius_norm(&self.matrix)
    }
}

fn check_square_finite(m: &ComplexMatrix) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

fn check_same_dim(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            actual: b.nrows(),
        });
    }
    Ok(())
}

/// Max-abs entry of `M − M†`.
pub fn hermitian_deviation(m: &ComplexMatrix) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

pub fn frobenius_norm(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn trace(m: &ComplexMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// `AB − BA`.
pub fn commutator(a: &HermitianOperator, b: &HermitianOperator) -> Result<ComplexMatrix> {
    check_same_dim(a.matrix(), b.matrix())?;
    Ok(a.matrix() * b.matrix() - b.matrix() * a.matrix())
}

/// Hilbert–Schmidt inner product `Tr(A†B)`.
pub fn hs_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<C64> {
    check_same_dim(a, b)?;
    Ok(a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum())
}

/// Real part of `Tr(AB)` for Hermitian `A`, `B`; the expectation-value kernel.
pub fn trace_product_re(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    // Tr(AB) = Σ_ij A_ij B_ji = Σ_ij conj(A_ji) B_ji for Hermitian A.
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| x.re * y.re + x.im * y.im)
        .sum()
}

/// Spectral decomposition `H = V diag(w) V†`, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: DVector<f64>,
    pub vectors: ComplexMatrix,
}

impl Eigh {
    /// `V diag(f(w)) V†`.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> ComplexMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let s = f(self.values[j]);
            for i in 0..n {
                scaled[(i, j)] *= s;
            }
        }
        scaled * self.vectors.adjoint()
    }
}

pub fn eigh(h: &HermitianOperator) -> Result<Eigh> {
    eigh_matrix(h.matrix())
}

/// Eigendecomposition of a matrix that is Hermitian by construction. Only the
/// lower triangle is read.
pub fn eigh_matrix(m: &ComplexMatrix) -> Result<Eigh> {
    check_square_finite(m)?;
    let n = m.nrows();
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 100_000).ok_or(Error::NoConvergence)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(Eigh { values, vectors })
}

/// `exp(H)` for Hermitian `H`. Callers that may see large eigenvalues should
/// shift the spectrum first.
pub fn hermitian_expm(h: &HermitianOperator) -> Result<ComplexMatrix> {
    let e = eigh(h)?;
    if e.values.iter().any(|w| w.exp().is_infinite()) {
        return Err(Error::InvalidArgument(
            "exponent overflows; shift the spectrum before exponentiating".into(),
        ));
    }
    Ok(e.map(f64::exp))
}

/// Square root of a numerically PSD Hermitian matrix. Eigenvalues in
/// `[-PSD_TOL, 0)` are clamped to zero.
pub fn psd_sqrtm(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let deviation = hermitian_deviation(m);
    if deviation > HERMITIAN_TOL * m.nrows().max(1) as f64 * max_abs(m).max(1.0) {
        return Err(Error::NotHermitian { deviation });
    }
    let e = eigh_matrix(m)?;
    let min = e.values.min();
    if min < -PSD_TOL {
        return Err(Error::NotPositive { min_eigenvalue: min });
    }
    // eigenvalues at rounding level are zeros; sqrt would amplify them
    let floor = e.values.amax() * f64::EPSILON * e.values.len() as f64;
    Ok(e.map(|w| if w <= floor { 0.0 } else { w.sqrt() }))
}

fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Greedy selection of the elements of `ops` that are linearly independent of
/// each other and of `span(seed_ops)`, in input order.
///
/// Operators are flattened to vectors and orthogonalized with modified
/// Gram–Schmidt (two passes). A candidate is kept when the norm of its residual
/// exceeds `tol` times its own norm; candidates whose norm is below `tol` times
/// the largest input norm count as zero.
pub fn linearly_independent_subset(
    ops: &[ComplexMatrix],
    seed_ops: &[ComplexMatrix],
    tol: f64,
) -> Vec<usize> {
    let mut basis = OrthoBasis::default();
    let scale = ops
        .iter()
        .chain(seed_ops)
        .map(frobenius_norm)
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return Vec::new();
    }
    for s in seed_ops {
        basis.try_push(flatten(s), tol, scale);
    }
    ops.iter()
        .enumerate()
        .filter_map(|(i, op)| basis.try_push(flatten(op), tol, scale).then_some(i))
        .collect()
}

/// Orthonormal basis of flattened operators, grown one candidate at a time.
#[derive(Debug, Clone, Default)]
pub struct OrthoBasis {
    vectors: Vec<Vec<C64>>,
}

impl OrthoBasis {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vec<C64>] {
        &self.vectors
    }

    /// Residual of `v` after removing its component in the span.
    pub fn residual(&self, mut v: Vec<C64>) -> Vec<C64> {
        for _ in 0..2 {
            for q in &self.vectors {
                let c: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, y) in v.iter_mut().zip(q) {
                    *x -= c * y;
                }
            }
        }
        v
    }

    /// Appends `v` if it is independent of the current span; returns whether it was kept.
    pub fn try_push(&mut self, v: Vec<C64>, tol: f64, scale: f64) -> bool {
        let norm = vec_norm(&v);
        if norm <= tol * scale {
            return false;
        }
        let r = self.residual(v);
        let rnorm = vec_norm(&r);
        if rnorm <= tol * norm {
            return false;
        }
        self.vectors
            .push(r.into_iter().map(|z| z / rnorm).collect());
        true
    }
}

fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Column-major flattening; any fixed order works for inner products.
pub fn flatten(m: &ComplexMatrix) -> Vec<C64> {
    m.iter().copied().collect()
}

pub fn unflatten(v: &[C64], dim: usize) -> ComplexMatrix {
    ComplexMatrix::from_column_slice(dim, dim, v)
}

/// Nested `[re, im]` arrays in row-major order, the JSON layout used for
/// matrices throughout the crate.
pub type MatrixJson = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_json(m: &ComplexMatrix) -> MatrixJson {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn matrix_from_json(rows: &MatrixJson) -> Result<ComplexMatrix> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::NotSquare {
            rows: n,
            cols: rows.first().map_or(0, Vec::len),
        });
    }
    Ok(ComplexMatrix::from_fn(n, n, |i, j| {
        C64::new(rows[i][j][0], rows[i][j][1])
    }))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabeledMatrixJson {
    pub label: String,
    pub matrix: MatrixJson,
}

impl From<&HermitianOperator> for LabeledMatrixJson {
    fn from(op: &HermitianOperator) -> Self {
        Self {
            label: op.label().to_string(),
            matrix: matrix_to_json(op.matrix()),
        }
    }
}

pub mod pauli {
    //! Single-qubit Pauli matrices.
    use super::ComplexMatrix;
    use num_complex::Complex64 as C64;

    const O: C64 = C64::new(0.0, 0.0);
    const ONE: C64 = C64::new(1.0, 0.0);
    const I: C64 = C64::new(0.0, 1.0);

    pub fn id() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[ONE, O, O, ONE])
    }

    pub fn x() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[O, ONE, ONE, O])
    }

    pub fn y() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[O, -I, I, O])
    }

    pub fn z() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[ONE, O, O, -ONE])
    }

    /// `σ_k` with `k = 0..=3` meaning `I, X, Y, Z`.
    pub fn sigma(k: usize) -> ComplexMatrix {
        match k {
            0 => id(),
            1 => x(),
            2 => y(),
            3 => z(),
            _ => panic!("Pauli index {k} out of range"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::SVD;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn herm(m: ComplexMatrix) -> HermitianOperator {
        HermitianOperator::new(m, "h").unwrap()
    }

    fn random_hermitian(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
        let g = ComplexMatrix::from_fn(dim, dim, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        (&g + g.adjoint()) * c(0.5, 0.0)
    }

    fn max_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Rank via SVD, independent of the Gram–Schmidt path.
    fn svd_rank(ops: &[ComplexMatrix], tol: f64) -> usize {
        if ops.is_empty() {
            return 0;
        }
        let rows = ops[0].len();
        let m = ComplexMatrix::from_fn(rows, ops.len(), |i, j| ops[j].as_slice()[i]);
        let sv = SVD::new(m, false, false).singular_values;
        let max = sv.max();
        sv.iter().filter(|&&s| s > tol * max).count()
    }

    #[test]
    fn commutator_pauli_algebra() {
        let xy = commutator(&herm(pauli::x()), &herm(pauli::y())).unwrap();
        assert!(max_diff(&xy, &(pauli::z() * c(0.0, 2.0))) < 1e-15);
        let zx = commutator(&herm(pauli::z()), &herm(pauli::x())).unwrap();
        assert!(max_diff(&zx, &(pauli::y() * c(0.0, 2.0))) < 1e-15);
        let h = herm(pauli::x() + pauli::z() * c(0.3, 0.0));
        let hh = commutator(&h, &h).unwrap();
        assert!(hh.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn commutator_dimension_mismatch() {
        let a = herm(pauli::x());
        let b = herm(identity(4));
        assert!(matches!(
            commutator(&a, &b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn hermitian_construction_rejects_and_symmetrizes() {
        let mut m = pauli::x();
        m[(0, 1)] = c(1.0, 1e-6);
        assert!(matches!(
            HermitianOperator::new(m.clone(), "bad"),
            Err(Error::NotHermitian { .. })
        ));
        m[(0, 1)] = c(1.0, 1e-13);
        let h = HermitianOperator::new(m, "ok").unwrap();
        assert_eq!(hermitian_deviation(h.matrix()), 0.0);

        let mut nan = pauli::z();
        nan[(0, 0)] = c(f64::NAN, 0.0);
        assert_eq!(HermitianOperator::new(nan, "nan"), Err(Error::NonFinite));
        let rect = ComplexMatrix::zeros(2, 3);
        assert!(matches!(
            HermitianOperator::new(rect, "rect"),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn eigh_diagonal_and_sigma_x() {
        let d = ComplexMatrix::from_diagonal(&DVector::from_vec(vec![c(3.0, 0.0), c(1.0, 0.0)]));
        let e = eigh(&herm(d)).unwrap();
        assert_abs_diff_eq!(e.values[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.values[1], 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.vectors[(1, 0)].norm(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.vectors[(0, 1)].norm(), 1.0, epsilon = 1e-14);

        let e = eigh(&herm(pauli::x())).unwrap();
        assert_abs_diff_eq!(e.values[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.values[1], 1.0, epsilon = 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // |−⟩ then |+⟩, up to phase
        let v0 = e.vectors.column(0);
        let v1 = e.vectors.column(1);
        assert_abs_diff_eq!((v0[0] * s - v0[1] * s).norm(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!((v1[0] * s + v1[1] * s).norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn eigh_random_8x8_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = random_hermitian(8, &mut rng);
        let e = eigh_matrix(&h).unwrap();
        let rebuilt = e.map(|w| w);
        assert!(frobenius_norm(&(&rebuilt - &h)) / frobenius_norm(&h) <= 1e-10);
        let vv = e.vectors.adjoint() * &e.vectors;
        assert!(frobenius_norm(&(vv - identity(8))) <= 1e-10);
        assert!(e.values.as_slice().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn expm_examples() {
        let z = hermitian_expm(&herm(ComplexMatrix::zeros(3, 3))).unwrap();
        assert!(max_diff(&z, &identity(3)) < 1e-15);

        let d = ComplexMatrix::from_diagonal(&DVector::from_vec(vec![
            c(2f64.ln(), 0.0),
            c(3f64.ln(), 0.0),
        ]));
        let e = hermitian_expm(&herm(d)).unwrap();
        assert_abs_diff_eq!(e[(0, 0)].re, 2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(e[(1, 1)].re, 3.0, epsilon = 1e-13);
        assert_abs_diff_eq!(e[(0, 1)].norm(), 0.0, epsilon = 1e-14);

        // Series identity: exp(θσx) = cosh θ I + sinh θ σx, since σx² = I.
        let theta = 0.7f64;
        let e = hermitian_expm(&herm(pauli::x() * c(theta, 0.0))).unwrap();
        let expected = identity(2) * c(theta.cosh(), 0.0) + pauli::x() * c(theta.sinh(), 0.0);
        assert!(max_diff(&e, &expected) < 1e-13);
        // Truncated Taylor series as a second route.
        let mut term = identity(2);
        let mut series = identity(2);
        let a = pauli::x() * c(theta, 0.0);
        for k in 1..30 {
            term = &term * &a * c(1.0 / k as f64, 0.0);
            series += &term;
        }
        assert!(max_diff(&e, &series) < 1e-13);
    }

    #[test]
    fn expm_overflow_is_reported() {
        let big = herm(identity(2) * c(1000.0, 0.0));
        assert!(hermitian_expm(&big).is_err());
    }

    #[test]
    fn sqrtm_examples() {
        let s = psd_sqrtm(&identity(4)).unwrap();
        assert!(max_diff(&s, &identity(4)) < 1e-14);
        let d = ComplexMatrix::from_diagonal(&DVector::from_vec(vec![c(4.0, 0.0), c(9.0, 0.0)]));
        let s = psd_sqrtm(&d).unwrap();
        assert_abs_diff_eq!(s[(0, 0)].re, 2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(s[(1, 1)].re, 3.0, epsilon = 1e-13);
        let psi = DVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)]);
        let proj = &psi * psi.adjoint();
        let s = psd_sqrtm(&proj).unwrap();
        assert!(max_diff(&s, &proj) < 1e-12);
    }

    #[test]
    fn sqrtm_rejects_negative() {
        let d = ComplexMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0, 0.0), c(-1e-6, 0.0)]));
        assert!(matches!(psd_sqrtm(&d), Err(Error::NotPositive { .. })));
        let d = ComplexMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0, 0.0), c(-1e-12, 0.0)]));
        assert!(psd_sqrtm(&d).is_ok());
    }

    #[test]
    fn hs_inner_examples() {
        assert_abs_diff_eq!(hs_inner(&pauli::x(), &pauli::x()).unwrap().re, 2.0);
        assert_abs_diff_eq!(hs_inner(&pauli::x(), &pauli::y()).unwrap().norm(), 0.0);
        assert_abs_diff_eq!(hs_inner(&identity(8), &identity(8)).unwrap().re, 8.0);
        assert!(hs_inner(&identity(2), &identity(4)).is_err());
    }

    #[test]
    fn li_subset_examples() {
        let ops = vec![pauli::x(), pauli::x() * c(2.0, 0.0), pauli::y()];
        assert_eq!(linearly_independent_subset(&ops, &[], LI_TOL), vec![0, 2]);
        let ops = vec![pauli::x(), pauli::y()];
        assert_eq!(linearly_independent_subset(&ops, &[pauli::y()], LI_TOL), vec![0]);
        assert!(linearly_independent_subset(&[], &[], LI_TOL).is_empty());
        let zero = ComplexMatrix::zeros(2, 2);
        assert_eq!(
            linearly_independent_subset(&[zero, pauli::z()], &[], LI_TOL),
            vec![1]
        );
    }

    #[test]
    fn li_subset_matches_svd_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        // 6 random operators plus 4 combinations of them.
        let mut ops: Vec<ComplexMatrix> = (0..6).map(|_| random_hermitian(4, &mut rng)).collect();
        for k in 0..4 {
            let combo = &ops[k] * c(0.3, 0.0) + &ops[k + 1] * c(-1.7, 0.0) + &ops[5 - k] * c(0.2, 0.0);
            ops.insert(2 * k + 1, combo);
        }
        let idx = linearly_independent_subset(&ops, &[], LI_TOL);
        assert_eq!(idx.len(), svd_rank(&ops, 1e-9));
        assert_eq!(idx.len(), 6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn eigh_reconstructs_random_hermitian(seed in any::<u64>(), dim in 1usize..=16) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random_hermitian(dim, &mut rng);
            let e = eigh_matrix(&h).unwrap();
            let err = frobenius_norm(&(e.map(|w| w) - &h)) / frobenius_norm(&h).max(1e-300);
            prop_assert!(err <= 1e-10);
        }

        #[test]
        fn expm_commutes_with_argument(seed in any::<u64>(), dim in 1usize..=8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random_hermitian(dim, &mut rng);
            let e = hermitian_expm(&herm(h.clone())).unwrap();
            prop_assert!(frobenius_norm(&(&e * &h - &h * &e)) <= 1e-9);
        }

        #[test]
        fn sqrtm_squares_back(seed in any::<u64>(), dim in 1usize..=8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_hermitian(dim, &mut rng);
            let m = &g * g.adjoint();
            let s = psd_sqrtm(&m).unwrap();
            prop_assert!(frobenius_norm(&(&s * &s - &m)) <= 1e-8);
        }

        #[test]
        fn li_subset_is_idempotent_with_positive_gram(seed in any::<u64>(), count in 1usize..12) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let base: Vec<ComplexMatrix> = (0..4).map(|_| random_hermitian(2, &mut rng)).collect();
            // redundant family: random combinations of at most 4 generators
            let ops: Vec<ComplexMatrix> = (0..count)
                .map(|_| {
                    base.iter().take(rng.random_range(1..=4)).fold(ComplexMatrix::zeros(2, 2), |acc, b| {
                        acc + b * c(rng.random_range(-1.0..1.0), 0.0)
                    })
                })
                .collect();
            let seed_ops = vec![pauli::z()];
            let idx = linearly_independent_subset(&ops, &seed_ops, LI_TOL);
            let kept: Vec<ComplexMatrix> = idx.iter().map(|&i| ops[i].clone()).collect();
            let again = linearly_independent_subset(&kept, &seed_ops, LI_TOL);
            prop_assert_eq!(again, (0..kept.len()).collect::<Vec<_>>());
            if !kept.is_empty() {
                let gram = DMatrix::from_fn(kept.len(), kept.len(), |i, j| {
                    hs_inner(&kept[i], &kept[j]).unwrap()
                });
                let min = eigh_matrix(&gram).unwrap().values.min();
                prop_assert!(min > 0.0);
            }
        }
    }
}

//! Constrained maximum-entropy solver.
//!
//! The MaxEnt state compatible with constraints `Tr(A_i ρ) = a_i` has the
//! exponential form `ρ(λ) = exp(H(λ))/Z` with `H(λ) = Σ λ_i A_i`. Symmetry
//! constraints add auxiliary observables with target zero and their own
//! multipliers. The multipliers are found by minimizing the squared constraint
//! violation `f(λ) = Σ_i (Tr(ρ(λ) A_i) − a_i)²` with a line-searched descent.
//!
//! Derivatives of `ρ(λ)` go through the Daleckii–Krein formula: in the
//! eigenbasis of `H`, the directional derivative of `exp` along `X` is
//! `K ∘ X` with `K_ab = (e^{w_a} − e^{w_b})/(w_a − w_b)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigh_matrix, matrix_to_json, trace_product_re, ComplexMatrix, Eigh, HermitianOperator, MatrixJson};
use crate::states::DensityMatrix;

/// Below this eigenvalue gap the divided difference is replaced by its limit.
const DEGENERATE_GAP: f64 = 1e-12;

/// Measured observables with targets, plus auxiliary observables with target zero.
#[derive(Debug, Clone)]
pub struct MaxEntProblem {
    measured: Vec<(HermitianOperator, f64)>,
    auxiliary: Vec<HermitianOperator>,
    n_qubits: usize,
}

impl MaxEntProblem {
    pub fn new(
        measured: Vec<(HermitianOperator, f64)>,
        auxiliary: Vec<HermitianOperator>,
        n_qubits: usize,
    ) -> Result<Self> {
        if n_qubits == 0 || n_qubits > 12 {
            return Err(Error::InvalidArgument(format!("unsupported qubit count {n_qubits}")));
        }
        let dim = 1usize << n_qubits;
        for op in measured.iter().map(|(a, _)| a).chain(&auxiliary) {
            if op.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: op.dim(),
                });
            }
        }
        if let Some((a, t)) = measured.iter().find(|(_, t)| !t.is_finite()) {
            return Err(Error::InvalidArgument(format!("target {t} for '{}' is not finite", a.label())));
        }
        Ok(Self {
            measured,
            auxiliary,
            n_qubits,
        })
    }

    pub fn measured(&self) -> &[(HermitianOperator, f64)] {
        &self.measured
    }

    pub fn auxiliary(&self) -> &[HermitianOperator] {
        &self.auxiliary
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// Number of multipliers: measured first, then auxiliary.
    pub fn n_constraints(&self) -> usize {
        self.measured.len() + self.auxiliary.len()
    }

    fn operators(&self) -> impl Iterator<Item = &ComplexMatrix> {
        self.measured
            .iter()
            .map(|(a, _)| a.matrix())
            .chain(self.auxiliary.iter().map(|a| a.matrix()))
    }

    fn targets(&self) -> impl Iterator<Item = f64> + '_ {
        self.measured
            .iter()
            .map(|(_, t)| *t)
            .chain(std::iter::repeat_n(0.0, self.auxiliary.len()))
    }

    fn check_lambdas(&self, lambdas: &[f64]) -> Result<()> {
        if lambdas.len() != self.n_constraints() {
            return Err(Error::DimensionMismatch {
                expected: self.n_constraints(),
                actual: lambdas.len(),
            });
        }
        if lambdas.iter().any(|l| !l.is_finite()) {
            return Err(Error::InvalidArgument("non-finite multiplier".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum StepRule {
    Fixed { step: f64 },
    Backtracking { shrink: f64, armijo: f64, initial_step: f64 },
}

impl Default for StepRule {
    fn default() -> Self {
        StepRule::Backtracking {
            shrink: 0.5,
            armijo: 1e-4,
            initial_step: 1.0,
        }
    }
}

/// Search direction for each iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Negative gradient of `f`.
    #[default]
    Gradient,
    /// Gauss–Newton step: the residual Jacobian is the covariance matrix of
    /// the constraint observables, inverted on its numerical range.
    GaussNewton,
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gradient" => Ok(Self::Gradient),
            "gauss_newton" | "gauss-newton" => Ok(Self::GaussNewton),
            other => Err(Error::Config(format!("unknown direction '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaInit {
    #[default]
    Zeros,
    Supplied(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Stop once `f` drops below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub step_rule: StepRule,
    pub direction: Direction,
    pub lambda_init: LambdaInit,
    /// Stop when `f` fell by less than `stall_tolerance` (relative) over the
    /// last `stall_window` iterations. Inconsistent targets (noisy data) have
    /// no exact solution and would otherwise use the whole budget. 0 disables.
    pub stall_window: usize,
    pub stall_tolerance: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 20_000,
            step_rule: StepRule::default(),
            direction: Direction::default(),
            lambda_init: LambdaInit::Zeros,
            stall_window: 100,
            stall_tolerance: 1e-3,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance {} must be positive", self.tolerance)));
        }
        if !(0.0..1.0).contains(&self.stall_tolerance) {
            return Err(Error::InvalidArgument(format!(
                "stall_tolerance {} must lie in [0, 1)",
                self.stall_tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be at least 1".into()));
        }
        match self.step_rule {
            StepRule::Fixed { step } if !(step > 0.0) => {
                Err(Error::InvalidArgument(format!("step {step} must be positive")))
            }
            StepRule::Backtracking {
                shrink,
                armijo,
                initial_step,
            } if !(shrink > 0.0 && shrink < 1.0 && armijo > 0.0 && armijo < 1.0 && initial_step > 0.0) => {
                Err(Error::InvalidArgument("invalid backtracking parameters".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MaxEntSolution {
    pub rho: DensityMatrix,
    /// Measured multipliers followed by auxiliary multipliers.
    pub lambdas: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaxEntSolutionJson {
    pub rho: MatrixJson,
    pub lambdas: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl MaxEntSolution {
    pub fn to_json(&self) -> MaxEntSolutionJson {
        MaxEntSolutionJson {
            rho: matrix_to_json(self.rho.matrix()),
            lambdas: self.lambdas.clone(),
            objective: self.objective,
            iterations: self.iterations,
            converged: self.converged,
        }
    }
}

/// Everything derived from one multiplier vector.
struct Evaluation {
    eig: Eigh,
    /// `exp(w − w_max)`, the shifted Boltzmann weights.
    weights: Vec<f64>,
    z: f64,
    rho: ComplexMatrix,
    expectations: Vec<f64>,
    residuals: Vec<f64>,
    objective: f64,
}

/// The problem flattened into operator and target arrays.
struct Model {
    ops: Vec<ComplexMatrix>,
    targets: Vec<f64>,
    dim: usize,
}

impl Model {
    fn new(problem: &MaxEntProblem) -> Self {
        Self {
            ops: problem.operators().cloned().collect(),
            targets: problem.targets().collect(),
            dim: problem.dim(),
        }
    }

    fn exponent(&self, lambdas: &[f64]) -> ComplexMatrix {
        let mut h = ComplexMatrix::zeros(self.dim, self.dim);
        for (op, &l) in self.ops.iter().zip(lambdas) {
            if l != 0.0 {
                add_scaled(&mut h, op, l);
            }
        }
        h
    }

    fn evaluate(&self, lambdas: &[f64]) -> Result<Evaluation> {
        let eig = eigh_matrix(&self.exponent(lambdas))?;
        let w_max = eig.values.max();
        let weights: Vec<f64> = eig.values.iter().map(|w| (w - w_max).exp()).collect();
        let z: f64 = weights.iter().sum();
        let rho = eig.map(|w| (w - w_max).exp() / z);
        let expectations: Vec<f64> = self.ops.iter().map(|a| trace_product_re(&rho, a)).collect();
        let residuals: Vec<f64> = expectations
            .iter()
            .zip(&self.targets)
            .map(|(e, t)| e - t)
            .collect();
        let objective = residuals.iter().map(|r| r * r).sum();
        Ok(Evaluation {
            eig,
            weights,
            z,
            rho,
            expectations,
            residuals,
            objective,
        })
    }

    /// Divided differences of the shifted exponential over the eigenvalues.
    fn kernel(ev: &Evaluation) -> DMatrix<f64> {
        let w = &ev.eig.values;
        let e = &ev.weights;
        let n = w.len();
        DMatrix::from_fn(n, n, |a, b| {
            let gap = w[a] - w[b];
            if gap.abs() < DEGENERATE_GAP {
                // limit of the quotient; symmetric average of the two ends
                0.5 * (e[a] + e[b])
            } else {
                (e[a] - e[b]) / gap
            }
        })
    }

    /// `∂f/∂λ_j = 2 Σ_i r_i C_ij`, computed through a single Fréchet
    /// derivative along the residual-weighted observable `B = Σ_i r_i A_i`.
    fn gradient(&self, ev: &Evaluation) -> Vec<f64> {
        let mut b = ComplexMatrix::zeros(self.dim, self.dim);
        for (op, &r) in self.ops.iter().zip(&ev.residuals) {
            add_scaled(&mut b, op, r);
        }
        let mean_b: f64 = ev
            .residuals
            .iter()
            .zip(&ev.expectations)
            .map(|(r, e)| r * e)
            .sum();
        let v = &ev.eig.vectors;
        let mut bp = v.adjoint() * &b * v;
        let k = Self::kernel(ev);
        for (z, kk) in bp.iter_mut().zip(k.iter()) {
            *z *= *kk;
        }
        let g = v * bp * v.adjoint();
        self.ops
            .iter()
            .zip(&ev.expectations)
            .map(|(a, e)| 2.0 * (trace_product_re(a, &g) / ev.z - mean_b * e))
            .collect()
    }

    /// Covariance `C_ij = Tr(A_i D[A_j])/Z − ⟨A_i⟩⟨A_j⟩`, the Jacobian of the residuals.
    fn covariance(&self, ev: &Evaluation) -> DMatrix<f64> {
        let v = &ev.eig.vectors;
        let k = Self::kernel(ev);
        let n = self.ops.len();
        let d2 = self.dim * self.dim;
        let mut rows = DMatrix::<C64>::zeros(n, d2);
        for (i, a) in self.ops.iter().enumerate() {
            let ap = v.adjoint() * a * v;
            for (idx, (z, kk)) in ap.iter().zip(k.iter()).enumerate() {
                rows[(i, idx)] = z * kk.sqrt();
            }
        }
        let gram = &rows * rows.adjoint();
        DMatrix::from_fn(n, n, |i, j| {
            gram[(i, j)].re / ev.z - ev.expectations[i] * ev.expectations[j]
        })
    }

    fn gauss_newton_direction(&self, ev: &Evaluation) -> Vec<f64> {
        let c = self.covariance(ev);
        let n = c.nrows();
        let eig = SymmetricEigen::new(c);
        let max = eig.eigenvalues.amax();
        let cutoff = max * 1e-12;
        let res = DVector::from_column_slice(&ev.residuals);
        let mut d = DVector::<f64>::zeros(n);
        for k in 0..n {
            let s = eig.eigenvalues[k];
            if s.abs() > cutoff {
                let u = eig.eigenvectors.column(k);
                d -= u * (u.dot(&res) / s);
            }
        }
        d.as_slice().to_vec()
    }
}

/// `ρ(λ) = exp(H − h_max)/Tr(exp(H − h_max))`.
pub fn rho_of_lambda(problem: &MaxEntProblem, lambdas: &[f64]) -> Result<DensityMatrix> {
    problem.check_lambdas(lambdas)?;
    let ev = Model::new(problem).evaluate(lambdas)?;
    Ok(DensityMatrix::trusted(ev.rho, problem.n_qubits()))
}

/// `f(λ) = Σ_i (Tr(ρ(λ) A_i) − a_i)²` over measured and auxiliary constraints.
pub fn objective(problem: &MaxEntProblem, lambdas: &[f64]) -> Result<f64> {
    problem.check_lambdas(lambdas)?;
    Ok(Model::new(problem).evaluate(lambdas)?.objective)
}

/// Analytic gradient of [`objective`].
pub fn gradient(problem: &MaxEntProblem, lambdas: &[f64]) -> Result<Vec<f64>> {
    problem.check_lambdas(lambdas)?;
    let model = Model::new(problem);
    let ev = model.evaluate(lambdas)?;
    Ok(model.gradient(&ev))
}

/// Constraint Jacobian `∂⟨A_i⟩/∂λ_j` (the covariance matrix of the observables in `ρ(λ)`).
pub fn jacobian(problem: &MaxEntProblem, lambdas: &[f64]) -> Result<DMatrix<f64>> {
    problem.check_lambdas(lambdas)?;
    let model = Model::new(problem);
    let ev = model.evaluate(lambdas)?;
    Ok(model.covariance(&ev))
}

/// Descends `f` from the initial multipliers until `f < tolerance`, the
/// iteration budget runs out, progress stalls, or the line search fails. Non-convergence is
/// reported through [`MaxEntSolution::converged`] with the best iterate.
pub fn solve(problem: &MaxEntProblem, options: &SolverOptions) -> Result<MaxEntSolution> {
    options.validate()?;
    let n = problem.n_constraints();
    let mut lambdas = match &options.lambda_init {
        LambdaInit::Zeros => vec![0.0; n],
        LambdaInit::Supplied(l) => {
            problem.check_lambdas(l)?;
            l.clone()
        }
    };
    let model = Model::new(problem);
    let mut ev = model.evaluate(&lambdas)?;
    let mut iterations = 0;
    let mut history = vec![ev.objective];

    while ev.objective >= options.tolerance && iterations < options.max_iterations {
        let w = options.stall_window;
        if w > 0 && iterations >= w {
            let before = history[iterations - w];
            if before - ev.objective < options.stall_tolerance * before {
                break;
            }
        }
        let grad = model.gradient(&ev);
        let direction = match options.direction {
            Direction::Gradient => grad.iter().map(|g| -g).collect(),
            Direction::GaussNewton => {
                let d = model.gauss_newton_direction(&ev);
                if dot(&d, &grad) < 0.0 {
                    d
                } else {
                    grad.iter().map(|g| -g).collect()
                }
            }
        };
        let slope = dot(&direction, &grad);
        if !(slope < 0.0) {
            break;
        }
        let step_to = |t: f64| -> Vec<f64> {
            lambdas
                .iter()
                .zip(&direction)
                .map(|(l, d)| l + t * d)
                .collect()
        };
        let accepted = match options.step_rule {
            StepRule::Fixed { step } => {
                let trial = step_to(step);
                model.evaluate(&trial).ok().map(|e| (trial, e))
            }
            StepRule::Backtracking {
                shrink,
                armijo,
                initial_step,
            } => {
                let mut t = initial_step;
                let mut found = None;
                // 0.5^60 ≈ 1e-18: nothing smaller can change λ
                for _ in 0..60 {
                    let trial = step_to(t);
                    if let Ok(e) = model.evaluate(&trial) {
                        if e.objective <= ev.objective + armijo * t * slope {
                            found = Some((trial, e));
                            break;
                        }
                    }
                    t *= shrink;
                }
                found
            }
        };
        match accepted {
            Some((l, e)) => {
                lambdas = l;
                ev = e;
                iterations += 1;
                history.push(ev.objective);
            }
            None => break,
        }
    }

    Ok(MaxEntSolution {
        rho: DensityMatrix::trusted(ev.rho, problem.n_qubits()),
        converged: ev.objective < options.tolerance,
        objective: ev.objective,
        lambdas,
        iterations,
    })
}

fn add_scaled(acc: &mut ComplexMatrix, op: &ComplexMatrix, factor: f64) {
    for (x, y) in acc.as_mut_slice().iter_mut().zip(op.as_slice()) {
        *x += y * factor;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

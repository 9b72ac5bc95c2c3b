//! Maximum-entropy estimation of quantum states from partial expectation-value
//! data, with optional symmetry constraints.
//!
//! The estimator returns the density matrix of largest von Neumann entropy
//! that reproduces the measured expectations. When the state is known to be
//! invariant under a group (qubit permutations, or collective unitaries
//! `U^{⊗N}` for Werner states), the invariance enters as extra auxiliary
//! observables with target value zero.
//!
//! Modules:
//! - [`linalg`]: dense complex kernel (eigendecomposition, matrix functions, independence tests)
//! - [`states`]: samplers, named states, noise, fidelity and entropy
//! - [`observables`]: Pauli and SIC-POVM observable sets
//! - [`symmetry`]: group generators and auxiliary observables
//! - [`maxent`]: the constrained MaxEnt solver
//! - [`measurement`]: finite-statistics and photon-counting simulation
//! - [`harness`]: experiment sweeps and result files

pub mod error;
pub mod harness;
pub mod linalg;
pub mod maxent;
pub mod measurement;
pub mod observables;
pub mod states;
pub mod symmetry;

pub use error::{Error, Result};

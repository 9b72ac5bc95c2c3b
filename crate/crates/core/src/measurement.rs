//! Simulated data acquisition.
//!
//! Every observable is measured through its rank-1 spectral modes
//! `|ψ_k⟩⟨ψ_k|`. Per mode, a detector sees `trials` pulses and reports a click
//! count. Three regimes are supported:
//!
//! - `Ideal`: counts are `round(N p_k)`
//! - `FiniteSample`: counts are `Binomial(N, p_k)`
//! - `PhotonModel`: an attenuated laser with mean photon number `μ` and dark
//!   count rate `λ_dc`, clicking with probability `1 − exp(−μ p_k − λ_dc)`
//!
//! Estimation inverts the click model (unless raw frequencies are requested),
//! renormalizes complete mode sets and recombines the eigenvalues.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigh, trace_product_re, ComplexMatrix, HermitianOperator};
use crate::states::DensityMatrix;

/// Eigenvalues with magnitude below this (relative to the largest) carry no mode.
const ZERO_EIGENVALUE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Ideal,
    FiniteSample,
    PhotonModel,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ideal" => Ok(Mode::Ideal),
            "finite_sample" => Ok(Mode::FiniteSample),
            "photon_model" => Ok(Mode::PhotonModel),
            other => Err(Error::Config(format!("unknown noise mode '{other}'"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Ideal => "ideal",
            Mode::FiniteSample => "finite_sample",
            Mode::PhotonModel => "photon_model",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// White-noise weight mixed into the prepared state.
    pub eta: f64,
    /// Mean photons per pulse.
    pub mu: f64,
    /// Mean dark counts per pulse.
    pub lambda_dc: f64,
    /// Pulses per projector mode.
    pub trials: u64,
    pub mode: Mode,
    /// Use `n/N` directly instead of inverting the click model.
    pub raw_frequencies: bool,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            eta: 0.0,
            mu: 0.18,
            lambda_dc: 2e-4,
            trials: 10_000,
            mode: Mode::Ideal,
            raw_frequencies: false,
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::Config(format!("eta must lie in [0, 1], got {}", self.eta)));
        }
        if !(self.mu.is_finite() && self.mu >= 0.0) {
            return Err(Error::Config(format!("mu must be non-negative, got {}", self.mu)));
        }
        if !(self.lambda_dc.is_finite() && self.lambda_dc >= 0.0) {
            return Err(Error::Config(format!("lambda_dc must be non-negative, got {}", self.lambda_dc)));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be positive".into()));
        }
        if self.mode == Mode::PhotonModel && !self.raw_frequencies && self.mu == 0.0 {
            return Err(Error::Config("photon model inversion needs mu > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub observable_label: String,
    pub mode_index: usize,
    pub counts: u64,
    pub trials: u64,
    pub estimated_probability: f64,
    pub estimated_expectation: f64,
    /// Set when `counts == trials` and the count was clamped before inversion.
    pub saturated: bool,
}

/// A rank-1 projector and the eigenvalue it carries.
#[derive(Debug, Clone)]
pub struct ProjectorMode {
    pub projector: ComplexMatrix,
    pub eigenvalue: f64,
}

/// Splits `a` into rank-1 spectral projectors, skipping the kernel.
pub fn projector_modes(a: &HermitianOperator) -> Result<Vec<ProjectorMode>> {
    let e = eigh(a)?;
    let scale = e.values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut modes = Vec::new();
    for (k, &w) in e.values.iter().enumerate() {
        if w.abs() <= ZERO_EIGENVALUE * scale {
            continue;
        }
        let v = e.vectors.column(k);
        modes.push(ProjectorMode {
            projector: v * v.adjoint(),
            eigenvalue: w,
        });
    }
    Ok(modes)
}

fn is_complete(modes: &[ProjectorMode], dim: usize) -> bool {
    modes.len() == dim
}

/// Probability of at least one click per pulse: `1 − exp(−μ p − λ_dc)`.
pub fn click_probability(p: f64, mu: f64, lambda_dc: f64) -> f64 {
    -(-mu * p - lambda_dc).exp_m1()
}

/// Inverts [`click_probability`] for `p`, clamped to `[0, 1]`.
pub fn invert_click_probability(freq: f64, mu: f64, lambda_dc: f64) -> f64 {
    ((-(-freq).ln_1p() - lambda_dc) / mu).clamp(0.0, 1.0)
}

/// Draws one count record per mode for the observable labelled `label`.
pub fn simulate_counts<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    label: &str,
    modes: &[ProjectorMode],
    config: &NoiseConfig,
    rng: &mut R,
) -> Result<Vec<MeasurementRecord>> {
    config.validate()?;
    let n = config.trials;
    modes
        .iter()
        .enumerate()
        .map(|(k, m)| {
            if m.projector.nrows() != rho.dim() {
                return Err(Error::DimensionMismatch {
                    expected: rho.dim(),
                    actual: m.projector.nrows(),
                });
            }
            let p = trace_product_re(rho.matrix(), &m.projector).clamp(0.0, 1.0);
            let counts = match config.mode {
                Mode::Ideal => (n as f64 * p).round() as u64,
                Mode::FiniteSample => binomial(n, p, rng)?,
                Mode::PhotonModel => binomial(n, click_probability(p, config.mu, config.lambda_dc), rng)?,
            };
            Ok(MeasurementRecord {
                observable_label: label.to_string(),
                mode_index: k,
                counts: counts.min(n),
                trials: n,
                estimated_probability: f64::NAN,
                estimated_expectation: f64::NAN,
                saturated: false,
            })
        })
        .collect()
}

fn binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> Result<u64> {
    let d = Binomial::new(n, p.clamp(0.0, 1.0)).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(d.sample(rng))
}

/// Turns the records of one observable into an expectation estimate.
///
/// Fills `estimated_probability`, `estimated_expectation` and `saturated` in
/// place. The records must be in mode order as produced by [`simulate_counts`]
/// for `projector_modes(a)`.
pub fn estimate_expectation(records: &mut [MeasurementRecord], a: &HermitianOperator, config: &NoiseConfig) -> Result<f64> {
    config.validate()?;
    let modes = projector_modes(a)?;
    if records.len() != modes.len() {
        return Err(Error::DimensionMismatch {
            expected: modes.len(),
            actual: records.len(),
        });
    }
    for (k, r) in records.iter_mut().enumerate() {
        if r.mode_index != k || r.trials == 0 || r.counts > r.trials {
            return Err(Error::InvalidArgument(format!(
                "record {k} of '{}' is inconsistent",
                r.observable_label
            )));
        }
        let invert = config.mode == Mode::PhotonModel && !config.raw_frequencies;
        let mut counts = r.counts;
        r.saturated = false;
        if invert && counts == r.trials {
            counts = r.trials - 1;
            r.saturated = true;
        }
        let freq = counts as f64 / r.trials as f64;
        r.estimated_probability = if invert {
            invert_click_probability(freq, config.mu, config.lambda_dc)
        } else {
            freq
        };
    }

    if is_complete(&modes, a.dim()) {
        let total: f64 = records.iter().map(|r| r.estimated_probability).sum();
        if total > 0.0 {
            for r in records.iter_mut() {
                r.estimated_probability /= total;
            }
        }
    }

    let (lo, hi) = modes.iter().fold((0.0f64, 0.0f64), |(lo, hi), m| {
        (lo.min(m.eigenvalue), hi.max(m.eigenvalue))
    });
    let estimate = records
        .iter()
        .zip(&modes)
        .map(|(r, m)| m.eigenvalue * r.estimated_probability)
        .sum::<f64>()
        .clamp(lo, hi);
    for r in records.iter_mut() {
        r.estimated_expectation = estimate;
    }
    Ok(estimate)
}

/// Simulates and estimates `Tr(ρ a)` in one call.
pub fn measure_expectation<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    a: &HermitianOperator,
    config: &NoiseConfig,
    rng: &mut R,
) -> Result<(f64, Vec<MeasurementRecord>)> {
    let modes = projector_modes(a)?;
    let mut records = simulate_counts(rho, a.label(), &modes, config, rng)?;
    let estimate = estimate_expectation(&mut records, a, config)?;
    Ok((estimate, records))
}

/// Photon-number statistics of `pulses` Poissonian pulses with mean `mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseStatistics {
    pub empty_fraction: f64,
    pub single_fraction: f64,
    pub multi_fraction: f64,
}

pub fn sample_pulse_statistics<R: Rng + ?Sized>(mu: f64, pulses: u64, rng: &mut R) -> Result<PulseStatistics> {
    if pulses == 0 || !(mu.is_finite() && mu > 0.0) {
        return Err(Error::InvalidArgument(format!("need mu > 0 and pulses > 0, got {mu}, {pulses}")));
    }
    let d = Poisson::new(mu).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut counts = [0u64; 3];
    for _ in 0..pulses {
        let k: f64 = d.sample(rng);
        counts[(k as usize).min(2)] += 1;
    }
    let total = pulses as f64;
    Ok(PulseStatistics {
        empty_fraction: counts[0] as f64 / total,
        single_fraction: counts[1] as f64 / total,
        multi_fraction: counts[2] as f64 / total,
    })
}

pub const RECORD_CSV_HEADER: &str = "state_id,observable_label,mode_index,counts,trials,p_hat,a_hat";

pub fn write_records_csv<W: Write>(out: &mut W, state_id: usize, records: &[MeasurementRecord]) -> Result<()> {
    for r in records {
        writeln!(
            out,
            "{state_id},{},{},{},{},{},{}",
            r.observable_label, r.mode_index, r.counts, r.trials, r.estimated_probability, r.estimated_expectation
        )?;
    }
    Ok(())
}

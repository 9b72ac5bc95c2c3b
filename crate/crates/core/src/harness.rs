//! Experiment sweeps: sample a batch of states, estimate them from the first
//! `r` observables for each requested `r`, and tabulate the fidelities.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{identity, matrix_from_json, HermitianOperator, MatrixJson};
use crate::maxent::{self, Direction, MaxEntProblem, MaxEntSolution, SolverOptions, StepRule};
use crate::measurement::{measure_expectation, Mode, NoiseConfig};
use crate::observables::{
    expectation, pauli_basis, pauli_from_label, sic_povm, sic_povm_complete, ObservableKind, ObservableSet,
};
use crate::states::{self, DensityMatrix};
use crate::symmetry::{filter_measured_observables, SymmetryGroupSpec, SymmetryKind};

pub const THREADS_ENV: &str = "SYMMAXENT_THREADS";
pub const RESULT_HEADER: &str = "state_id,r,fidelity,converged,iterations";
pub const SUMMARY_HEADER: &str = "r,mean_f,std_f,n_converged";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateFamily {
    HaarPure,
    PermutationInvariant,
    Werner,
    Ghz,
    Dicke(usize),
}

impl FromStr for StateFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "haar_pure" => return Ok(Self::HaarPure),
            "permutation_invariant" => return Ok(Self::PermutationInvariant),
            "werner" => return Ok(Self::Werner),
            "ghz" => return Ok(Self::Ghz),
            _ => {}
        }
        s.strip_prefix("dicke(")
            .and_then(|rest| rest.strip_suffix(')'))
            .and_then(|k| k.trim().parse().ok())
            .map(Self::Dicke)
            .ok_or_else(|| Error::Config(format!("unknown state family '{s}'")))
    }
}

impl fmt::Display for StateFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::HaarPure => f.write_str("haar_pure"),
            Self::PermutationInvariant => f.write_str("permutation_invariant"),
            Self::Werner => f.write_str("werner"),
            Self::Ghz => f.write_str("ghz"),
            Self::Dicke(k) => write!(f, "dicke({k})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n_qubits: usize,
    pub state_family: StateFamily,
    pub observable_kind: ObservableKind,
    pub symmetry: SymmetryKind,
    pub batch_size: usize,
    pub r_values: Vec<usize>,
    pub noise: NoiseConfig,
    pub solver: SolverOptions,
    pub seed: u64,
    pub shuffle_observables: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::for_qubits(3)
    }
}

/// Solver settings used by sweeps unless the config overrides them.
pub fn default_sweep_solver() -> SolverOptions {
    SolverOptions {
        direction: Direction::GaussNewton,
        ..SolverOptions::default()
    }
}

impl ExperimentConfig {
    /// Defaults with the full `0..=4^N − 1` sweep.
    pub fn for_qubits(n_qubits: usize) -> Self {
        ExperimentConfig {
            n_qubits,
            state_family: StateFamily::HaarPure,
            observable_kind: ObservableKind::Pauli,
            symmetry: SymmetryKind::None,
            batch_size: 100,
            r_values: (0..=max_r(n_qubits)).collect(),
            noise: NoiseConfig::default(),
            solver: default_sweep_solver(),
            seed: 0,
            shuffle_observables: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=6).contains(&self.n_qubits) {
            return Err(Error::Config(format!("n_qubits must be in 1..=6, got {}", self.n_qubits)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        let top = max_r(self.n_qubits);
        if let Some(r) = self.r_values.iter().find(|&&r| r > top) {
            return Err(Error::Config(format!("r = {r} exceeds {top}")));
        }
        if self.r_values.is_empty() {
            return Err(Error::Config("r_values is empty".into()));
        }
        match self.state_family {
            StateFamily::Ghz if self.n_qubits < 2 => {
                return Err(Error::Config("ghz needs at least 2 qubits".into()));
            }
            StateFamily::Dicke(k) if k > self.n_qubits => {
                return Err(Error::Config(format!("dicke({k}) needs k <= n_qubits")));
            }
            _ => {}
        }
        if self.symmetry == SymmetryKind::Permutation && self.n_qubits < 2 {
            return Err(Error::Config("permutation symmetry needs at least 2 qubits".into()));
        }
        self.noise.validate()?;
        self.solver.validate()
    }

    /// Parses a flat `key = value` file. Blank lines and `#` comments are
    /// ignored; missing keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            if entries.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key '{}'", lineno + 1, k.trim())));
            }
        }

        let n_qubits = match entries.remove("n_qubits") {
            Some(v) => parse_value("n_qubits", &v)?,
            None => 3,
        };
        let mut cfg = Self::for_qubits(n_qubits);
        let mut step = None;
        let mut step_size = None;
        for (key, v) in entries {
            match key.as_str() {
                "state_family" => cfg.state_family = v.parse()?,
                "observable_kind" => cfg.observable_kind = v.parse()?,
                "symmetry" => cfg.symmetry = v.parse()?,
                "batch_size" => cfg.batch_size = parse_value(&key, &v)?,
                "r_values" => cfg.r_values = parse_r_values(&v)?,
                "seed" => cfg.seed = parse_value(&key, &v)?,
                "shuffle_observables" => cfg.shuffle_observables = parse_value(&key, &v)?,
                "eta" => cfg.noise.eta = parse_value(&key, &v)?,
                "mu" => cfg.noise.mu = parse_value(&key, &v)?,
                "lambda_dc" => cfg.noise.lambda_dc = parse_value(&key, &v)?,
                "trials" => cfg.noise.trials = parse_value(&key, &v)?,
                "noise_mode" => cfg.noise.mode = v.parse()?,
                "raw_frequencies" => cfg.noise.raw_frequencies = parse_value(&key, &v)?,
                "tolerance" => cfg.solver.tolerance = parse_value(&key, &v)?,
                "max_iterations" => cfg.solver.max_iterations = parse_value(&key, &v)?,
                "direction" => cfg.solver.direction = v.parse()?,
                "stall_window" => cfg.solver.stall_window = parse_value(&key, &v)?,
                "stall_tolerance" => cfg.solver.stall_tolerance = parse_value(&key, &v)?,
                "step_rule" => step = Some(v),
                "step_size" => step_size = Some(parse_value::<f64>(&key, &v)?),
                other => return Err(Error::Config(format!("unknown key '{other}'"))),
            }
        }
        match step.as_deref().map(str::to_ascii_lowercase).as_deref() {
            None | Some("backtracking") => {
                if let Some(s) = step_size {
                    if let StepRule::Backtracking { initial_step, .. } = &mut cfg.solver.step_rule {
                        *initial_step = s;
                    }
                }
            }
            Some("fixed") => cfg.solver.step_rule = StepRule::Fixed { step: step_size.unwrap_or(0.1) },
            Some(other) => return Err(Error::Config(format!("unknown step_rule '{other}'"))),
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

fn max_r(n_qubits: usize) -> usize {
    (1usize << (2 * n_qubits.min(16))) - 1
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("bad value '{v}' for {key}")))
}

/// Comma-separated integers and ranges (`a..b`, `a..=b`).
pub fn parse_r_values(v: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for item in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((a, b)) = item.split_once("..=") {
            out.extend(parse_value::<usize>("r_values", a)?..=parse_value::<usize>("r_values", b)?);
        } else if let Some((a, b)) = item.split_once("..") {
            out.extend(parse_value::<usize>("r_values", a)?..parse_value::<usize>("r_values", b)?);
        } else {
            out.push(parse_value("r_values", item)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub state_id: usize,
    pub r: usize,
    pub fidelity: f64,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub r: usize,
    pub mean_f: f64,
    pub std_f: f64,
    pub n_converged: usize,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub config: ExperimentConfig,
    /// Observables left after symmetry filtering; larger `r` uses all of them.
    pub observables_available: usize,
    pub auxiliary_count: usize,
    pub rows: Vec<ResultRow>,
}

impl SweepResult {
    pub fn summary(&self) -> Vec<SummaryRow> {
        summarize(&self.rows)
    }

    /// Mean fidelity at `r`, if `r` was swept.
    pub fn mean_at(&self, r: usize) -> Option<f64> {
        self.summary().into_iter().find(|s| s.r == r).map(|s| s.mean_f)
    }
}

/// Per-`r` mean, population standard deviation and converged count, ordered by `r`.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut by_r: BTreeMap<usize, Vec<&ResultRow>> = BTreeMap::new();
    for row in rows {
        by_r.entry(row.r).or_default().push(row);
    }
    by_r.into_iter()
        .map(|(r, group)| {
            let n = group.len() as f64;
            let mean = group.iter().map(|g| g.fidelity).sum::<f64>() / n;
            let var = group.iter().map(|g| (g.fidelity - mean).powi(2)).sum::<f64>() / n;
            SummaryRow {
                r,
                mean_f: mean,
                std_f: var.sqrt(),
                n_converged: group.iter().filter(|g| g.converged).count(),
            }
        })
        .collect()
}

/// Draws the prepared state for one batch slot, before white noise.
pub fn sample_state(family: StateFamily, n_qubits: usize, rng: &mut ChaCha8Rng) -> Result<DensityMatrix> {
    Ok(match family {
        StateFamily::HaarPure => states::haar_pure(n_qubits, rng)?.to_density(),
        StateFamily::PermutationInvariant => states::haar_symmetric_pure(n_qubits, rng)?.to_density(),
        StateFamily::Werner => states::random_werner(n_qubits, rng)?,
        StateFamily::Ghz => states::ghz(n_qubits)?.to_density(),
        StateFamily::Dicke(k) => states::dicke(n_qubits, k)?.to_density(),
    })
}

fn candidate_observables(kind: ObservableKind, n_qubits: usize) -> Result<ObservableSet> {
    match kind {
        ObservableKind::Pauli => pauli_basis(n_qubits),
        ObservableKind::Sic => sic_povm(n_qubits),
        ObservableKind::Custom => Err(Error::Config("sweeps need pauli or sic observables".into())),
    }
}

/// Drops candidates already fixed by the auxiliary constraints and normalization.
fn usable_observables(candidates: &ObservableSet, aux: &[HermitianOperator]) -> Result<ObservableSet> {
    if aux.is_empty() {
        return Ok(candidates.clone());
    }
    let dim = 1usize << candidates.n_qubits();
    let mut seed = aux.to_vec();
    seed.push(HermitianOperator::new(identity(dim), "identity")?);
    filter_measured_observables(candidates, &seed)
}

struct Prepared {
    aux: Vec<HermitianOperator>,
    observables: ObservableSet,
}

fn prepare(config: &ExperimentConfig) -> Result<Prepared> {
    let aux = if config.symmetry == SymmetryKind::None {
        Vec::new()
    } else {
        SymmetryGroupSpec::build(config.symmetry, config.n_qubits)?.auxiliary
    };
    let candidates = candidate_observables(config.observable_kind, config.n_qubits)?;
    let observables = usable_observables(&candidates, &aux)?;
    Ok(Prepared { aux, observables })
}

/// Independent random stream for one batch slot and purpose.
fn stream(seed: u64, state_id: usize, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((state_id as u64) << 2) | purpose);
    rng
}

fn run_state(config: &ExperimentConfig, prep: &Prepared, state_id: usize) -> Result<Vec<ResultRow>> {
    let n = config.n_qubits;
    let mut state_rng = stream(config.seed, state_id, 0);
    let mut rho = sample_state(config.state_family, n, &mut state_rng)?;
    if config.noise.eta > 0.0 {
        rho = DensityMatrix::maximally_mixed(n).mix(&rho, config.noise.eta)?;
    }

    let shuffled;
    let observables = if config.shuffle_observables {
        let mut order_rng = stream(config.seed, state_id, 1);
        let mut candidates = candidate_observables(config.observable_kind, n)?.into_observables();
        candidates.shuffle(&mut order_rng);
        let set = ObservableSet::new(candidates, config.observable_kind, n)?;
        shuffled = usable_observables(&set, &prep.aux)?;
        &shuffled
    } else {
        &prep.observables
    };

    let mut noise_rng = stream(config.seed, state_id, 2);
    let targets = observables
        .observables()
        .iter()
        .map(|a| match config.noise.mode {
            Mode::Ideal => expectation(&rho, a),
            _ => measure_expectation(&rho, a, &config.noise, &mut noise_rng).map(|(v, _)| v),
        })
        .collect::<Result<Vec<f64>>>()?;

    config
        .r_values
        .iter()
        .map(|&r| {
            let used = r.min(observables.len());
            let measured = observables.observables()[..used]
                .iter()
                .cloned()
                .zip(targets[..used].iter().copied())
                .collect();
            let problem = MaxEntProblem::new(measured, prep.aux.clone(), n)?;
            let sol = maxent::solve(&problem, &config.solver)?;
            Ok(ResultRow {
                state_id,
                r,
                fidelity: states::fidelity(&sol.rho, &rho)?,
                converged: sol.converged,
                iterations: sol.iterations,
            })
        })
        .collect()
}

fn thread_count() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&t| t > 0)
}

/// Runs the whole batch. Output depends only on the config, not on the
/// number of worker threads.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    config.validate()?;
    let prep = prepare(config)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = thread_count() {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| Error::Config(e.to_string()))?;
    let per_state: Vec<Vec<ResultRow>> = pool.install(|| {
        (0..config.batch_size)
            .into_par_iter()
            .map(|id| run_state(config, &prep, id))
            .collect::<Result<_>>()
    })?;
    Ok(SweepResult {
        config: config.clone(),
        observables_available: prep.observables.len(),
        auxiliary_count: prep.aux.len(),
        rows: per_state.into_iter().flatten().collect(),
    })
}

pub fn write_result_csv<W: Write>(out: &mut W, rows: &[ResultRow]) -> Result<()> {
    writeln!(out, "{RESULT_HEADER}")?;
    for row in rows {
        writeln!(out, "{},{},{},{},{}", row.state_id, row.r, row.fidelity, row.converged, row.iterations)?;
    }
    Ok(())
}

pub fn read_result_csv<R: BufRead>(input: R) -> Result<Vec<ResultRow>> {
    let mut lines = input.lines();
    match lines.next().transpose()? {
        Some(h) if h.trim() == RESULT_HEADER => {}
        other => return Err(Error::Config(format!("unexpected result header {other:?}"))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 5 {
            return Err(Error::Config(format!("line {}: expected 5 fields", i + 2)));
        }
        rows.push(ResultRow {
            state_id: parse_value("state_id", f[0])?,
            r: parse_value("r", f[1])?,
            fidelity: parse_value("fidelity", f[2])?,
            converged: parse_value("converged", f[3])?,
            iterations: parse_value("iterations", f[4])?,
        });
    }
    Ok(rows)
}

pub fn write_summary_csv<W: Write>(out: &mut W, summary: &[SummaryRow]) -> Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    for s in summary {
        writeln!(out, "{},{},{},{}", s.r, s.mean_f, s.std_f, s.n_converged)?;
    }
    Ok(())
}

pub fn meta_json(result: &SweepResult) -> serde_json::Value {
    serde_json::json!({
        "version": env!("CARGO_PKG_VERSION"),
        "config": result.config,
        "observables_available": result.observables_available,
        "auxiliary_count": result.auxiliary_count,
        "std_convention": "population",
    })
}

/// Writes `result.csv`, `summary.csv` and `meta.json` into `dir`.
pub fn write_outputs(result: &SweepResult, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join("result.csv"))?);
    write_result_csv(&mut f, &result.rows)?;
    f.flush()?;
    let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join("summary.csv"))?);
    write_summary_csv(&mut f, &result.summary())?;
    f.flush()?;
    let meta = serde_json::to_string_pretty(&meta_json(result))?;
    std::fs::write(dir.join("meta.json"), meta + "\n")?;
    Ok(())
}

/// One measured value for `symmaxent solve`. Without `matrix`, `label` names
/// a Pauli string (`"XIZ"`) or a SIC element (`"SIC-013"`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TargetJson {
    pub label: String,
    pub value: f64,
    #[serde(default)]
    pub matrix: Option<MatrixJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TargetsFile {
    pub n_qubits: usize,
    #[serde(default = "no_symmetry")]
    pub symmetry: SymmetryKind,
    pub targets: Vec<TargetJson>,
    #[serde(default = "default_sweep_solver")]
    pub solver: SolverOptions,
}

fn no_symmetry() -> SymmetryKind {
    SymmetryKind::None
}

fn resolve_target(t: &TargetJson, n_qubits: usize) -> Result<HermitianOperator> {
    if let Some(m) = &t.matrix {
        return HermitianOperator::new(matrix_from_json(m)?, t.label.clone());
    }
    if t.label.starts_with("SIC-") {
        return sic_povm_complete(n_qubits)?
            .get(&t.label)
            .cloned()
            .ok_or_else(|| Error::InvalidArgument(format!("unknown SIC label '{}'", t.label)));
    }
    pauli_from_label(&t.label)
}

/// Solves the problem described by a targets file.
pub fn solve_targets(file: &TargetsFile) -> Result<MaxEntSolution> {
    let measured = file
        .targets
        .iter()
        .map(|t| Ok((resolve_target(t, file.n_qubits)?, t.value)))
        .collect::<Result<Vec<_>>>()?;
    let aux = if file.symmetry == SymmetryKind::None {
        Vec::new()
    } else {
        SymmetryGroupSpec::build(file.symmetry, file.n_qubits)?.auxiliary
    };
    maxent::solve(&MaxEntProblem::new(measured, aux, file.n_qubits)?, &file.solver)
}

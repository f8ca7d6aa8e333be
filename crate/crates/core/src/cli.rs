//! Batch experiment runner behind the `qmon` binary.
//!
//! Every subcommand takes its parameters as flags or from a JSON file given
//! with `--config`. Flags win over the file. Unknown keys in the file are
//! rejected. All parameters are validated before any computation starts.
//!
//! Exit codes: 0 success, 1 validation error, 2 solver found no solution,
//! 3 dense dimension cap exceeded.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::algebra::{random_density_from, tensor, trace_distance, Operator, C64};
use crate::darwinism::{mutual_info_profile, system_state_after, Backend, EnvironmentModel, DEFAULT_DIM_CAP};
use crate::error::QmonError;
use crate::monitoring::{dephase, irreality};
use crate::observable::PhaseVector;
use crate::output::{csv_line, fmt_float};
use crate::phases::{analytic_phases, analytic_theta_for, eta_nominal, solve_phases_with, NoiseLevel, SolverOptions};
use crate::qubit::{channel_distance, compare_with_general_t};
use crate::weyl::Dimension;

const DEFAULT_TOL: f64 = 1e-10;
const DEFAULT_BASELINE_POINTS: usize = 20;
const DEFAULT_BASELINE_STATES: usize = 10;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("no phase solution found: {0}")]
    SolverNotFound(String),
    #[error("{0}")]
    DimensionCap(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) => 1,
            Self::SolverNotFound(_) => 2,
            Self::DimensionCap(_) => 3,
        }
    }
}

impl From<QmonError> for CliError {
    fn from(e: QmonError) -> Self {
        match e {
            QmonError::DimensionCapExceeded { .. } => {
                Self::DimensionCap(format!("{e}; use the structured backend or raise QMON_DIM_CAP"))
            }
            other => Self::Validation(other.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Initial state of `A ⊗ B`.
#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
#[serde(try_from = "String")]
pub enum StateSpec {
    PureRandom,
    /// Random mixed state of the given rank (full rank when absent).
    MixedRandom(Option<usize>),
    /// `|+⟩` on `A`, `|0⟩` on `B`.
    PlusState,
    /// JSON operator file.
    File(PathBuf),
}

impl FromStr for StateSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let rank = |r: &str| {
            r.parse::<usize>()
                .map_err(|_| format!("invalid rank {r:?} in state spec"))
                .map(|r| Self::MixedRandom(Some(r)))
        };
        match s {
            "pure-random" => Ok(Self::PureRandom),
            "mixed-random" => Ok(Self::MixedRandom(None)),
            "plus-state" => Ok(Self::PlusState),
            _ => {
                if let Some(path) = s.strip_prefix("file:") {
                    return Ok(Self::File(PathBuf::from(path)));
                }
                if let Some(r) = s.strip_prefix("mixed-random:") {
                    return rank(r);
                }
                if let Some(r) = s.strip_prefix("mixed-random(").and_then(|r| r.strip_suffix(')')) {
                    return rank(r);
                }
                Err(format!(
                    "unknown state spec {s:?}; expected pure-random, mixed-random[:rank], plus-state or file:<path>"
                ))
            }
        }
    }
}

impl TryFrom<String> for StateSpec {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

#[derive(Parser, Debug)]
#[command(name = "qmon", version, about = "Qudit monitoring experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve the phase constraint system for a target noise level.
    SolvePhases(SolveArgs),
    /// Distance of the system state to its dephased form versus n.
    Convergence(ConvergenceArgs),
    /// Mutual information between the system and environment fragments.
    Fragments(FragmentsArgs),
    /// Compare the c-maybe gate with the general qubit construction.
    QubitBaseline(BaselineArgs),
}

macro_rules! overlay {
    ($flags:ident, $file:ident; $($field:ident),* $(,)?) => {
        $(if $flags.$field.is_none() {
            $flags.$field = $file.$field;
        })*
    };
}

#[derive(Args, Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveArgs {
    #[arg(long)]
    pub d: Option<usize>,
    /// Target noise level in [0, 1].
    #[arg(long, allow_hyphen_values = true)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_restarts: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceArgs {
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub d_b: Option<usize>,
    /// Angle of the analytic phase family.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub n_max: Option<usize>,
    #[arg(long)]
    pub state: Option<StateSpec>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FragmentsArgs {
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub d_b: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub eta: Option<f64>,
    /// Explicit phase vector, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub phases: Option<Vec<f64>>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m_max: Option<usize>,
    #[arg(long)]
    pub state: Option<StateSpec>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub backend: Option<Backend>,
    /// Largest total dimension handled by the dense backend.
    #[arg(long, env = "QMON_DIM_CAP")]
    pub dim_cap: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineArgs {
    /// Explicit angle grid, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub thetas: Option<Vec<f64>>,
    /// Number of evenly spaced angles in [0, π/2].
    #[arg(long)]
    pub points: Option<usize>,
    /// Random states per angle.
    #[arg(long)]
    pub states: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> CliResult<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = fs::read_to_string(path).map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("invalid config {}: {e}", path.display())))
}

/// Independent random stream `index` derived from one seed.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn dimension(d: Option<usize>) -> CliResult<Dimension> {
    let d = d.ok_or_else(|| invalid("missing --d"))?;
    Ok(Dimension::new(d)?)
}

fn tolerance(tol: Option<f64>) -> CliResult<f64> {
    let tol = tol.unwrap_or(DEFAULT_TOL);
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(QmonError::InvalidTolerance(tol).into());
    }
    Ok(tol)
}

fn bystander(d_b: Option<usize>) -> CliResult<usize> {
    match d_b.unwrap_or(1) {
        0 => Err(invalid("--d-b must be positive")),
        d_b => Ok(d_b),
    }
}

/// How the phase vector of `T` is chosen.
enum PhaseSource {
    Theta(f64),
    Eta(NoiseLevel),
    Explicit(PhaseVector),
}

fn phase_source(
    d: Dimension,
    theta: Option<f64>,
    eta: Option<f64>,
    phases: Option<Vec<f64>>,
) -> CliResult<PhaseSource> {
    let given = [theta.is_some(), eta.is_some(), phases.is_some()];
    if given.iter().filter(|g| **g).count() != 1 {
        return Err(invalid("give exactly one of --theta, --eta, --phases"));
    }
    if let Some(theta) = theta {
        if !theta.is_finite() {
            return Err(invalid("--theta must be finite"));
        }
        return Ok(PhaseSource::Theta(theta));
    }
    if let Some(eta) = eta {
        return Ok(PhaseSource::Eta(NoiseLevel::new(eta)?));
    }
    let phases = PhaseVector::new(phases.unwrap_or_default())?;
    if phases.d() != d.get() {
        return Err(QmonError::PhaseCount {
            expected: d.get(),
            found: phases.d(),
        }
        .into());
    }
    Ok(PhaseSource::Explicit(phases))
}

fn resolve_phases(d: Dimension, source: PhaseSource, seed: u64, tol: f64) -> CliResult<PhaseVector> {
    match source {
        PhaseSource::Theta(theta) => Ok(analytic_phases(d, theta)),
        PhaseSource::Explicit(p) => Ok(p),
        PhaseSource::Eta(eta) => {
            if let Some(theta) = analytic_theta_for(d, eta) {
                return Ok(analytic_phases(d, theta));
            }
            let opts = SolverOptions {
                residual_tol: tol,
                eta_tol: tol,
                ..SolverOptions::default()
            };
            let report = solve_phases_with(d, eta, seed, opts)?;
            if !report.converged {
                return Err(CliError::SolverNotFound(format!(
                    "d={} eta={} residual={:e}",
                    d.get(),
                    eta.value(),
                    report.residual_norm
                )));
            }
            Ok(report.phases)
        }
    }
}

fn build_state(spec: &StateSpec, d: usize, d_b: usize, seed: u64) -> CliResult<Operator> {
    let dim = d * d_b;
    let mut rng = stream_rng(seed, 0);
    match spec {
        StateSpec::PureRandom => Ok(random_density_from(dim, 1, &mut rng)?),
        StateSpec::MixedRandom(rank) => Ok(random_density_from(dim, rank.unwrap_or(dim), &mut rng)?),
        StateSpec::PlusState => {
            let amp = C64::new(1.0 / d as f64, 0.0);
            let plus = Operator::from_matrix(nalgebra::DMatrix::from_element(d, d, amp))?;
            Ok(tensor(&[plus, Operator::basis_projector(d_b, 0)])?)
        }
        StateSpec::File(path) => {
            let text =
                fs::read_to_string(path).map_err(|e| invalid(format!("cannot read state {}: {e}", path.display())))?;
            let rho: Operator = serde_json::from_str(&text)
                .map_err(|e| invalid(format!("invalid state file {}: {e}", path.display())))?;
            if rho.dim() != dim {
                return Err(QmonError::DimensionMismatch {
                    expected: dim,
                    found: rho.dim(),
                }
                .into());
            }
            rho.validate_density()?;
            Ok(rho)
        }
    }
}

fn emit(out: Option<&Path>, body: &str) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, body).map_err(|e| invalid(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub fn cmd_solve_phases(mut args: SolveArgs) -> CliResult<()> {
    let file: SolveArgs = load_config(args.config.as_deref())?;
    overlay!(args, file; d, eta, seed, tol, max_restarts, out, format);

    let d = dimension(args.d)?;
    let eta = NoiseLevel::new(args.eta.ok_or_else(|| invalid("missing --eta"))?)?;
    let tol = tolerance(args.tol)?;
    let seed = args.seed.unwrap_or(0);
    let opts = SolverOptions {
        residual_tol: tol,
        eta_tol: tol,
        max_restarts: args.max_restarts.unwrap_or(SolverOptions::default().max_restarts),
        ..SolverOptions::default()
    };

    log::info!("solving d={} eta={} seed={seed}", d.get(), eta.value());
    let report = solve_phases_with(d, eta, seed, opts)?;
    let body = match args.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&report),
        Format::Csv => {
            let phases: Vec<String> = report.phases.phases().iter().map(|p| fmt_float(*p)).collect();
            let mut s =
                String::from("d,target_eta,achieved_eta,residual_norm,iterations,restarts,seed,converged,phases\n");
            s.push_str(&csv_line(&[
                d.get().to_string(),
                fmt_float(report.target_eta.value()),
                fmt_float(report.achieved_eta.value()),
                fmt_float(report.residual_norm),
                report.iterations.to_string(),
                report.restarts.to_string(),
                report.seed.to_string(),
                report.converged.to_string(),
                phases.join(";"),
            ]));
            s
        }
    };
    emit(args.out.as_deref(), &body)?;
    if !report.converged {
        return Err(CliError::SolverNotFound(format!(
            "d={} eta={} residual={:e}",
            d.get(),
            eta.value(),
            report.residual_norm
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub trace_distance_to_dephased: f64,
    pub irreality_bits: f64,
    pub effective_epsilon: f64,
}

pub fn cmd_convergence(mut args: ConvergenceArgs) -> CliResult<()> {
    let file: ConvergenceArgs = load_config(args.config.as_deref())?;
    overlay!(args, file; d, d_b, theta, eta, n_max, state, seed, tol, out, format);

    let d = dimension(args.d)?;
    let d_b = bystander(args.d_b)?;
    let source = phase_source(d, args.theta, args.eta, None)?;
    let n_max = args.n_max.ok_or_else(|| invalid("missing --n-max"))?;
    if n_max < 1 {
        return Err(invalid("--n-max must be at least 1"));
    }
    let seed = args.seed.unwrap_or(0);
    let tol = tolerance(args.tol)?;
    let state = args.state.clone().unwrap_or(StateSpec::PureRandom);
    let rho = build_state(&state, d.get(), d_b, seed)?;
    let phases = resolve_phases(d, source, seed, tol)?;

    let model = EnvironmentModel::new(phases, 0, d_b)?;
    let layout = model.system_layout();
    let dephased = dephase(&rho, model.basis(), &layout)?;
    let eta = eta_nominal(model.phases());
    log::info!("convergence d={} d_b={d_b} eta={eta} n_max={n_max}", d.get());
    let rows = (0..=n_max)
        .into_par_iter()
        .map(|n| {
            let m = model.clone().with_n(n);
            let sys = system_state_after(&rho, &m)?;
            Ok(ConvergenceRow {
                n,
                trace_distance_to_dephased: trace_distance(&sys, &dephased)?,
                irreality_bits: irreality(&sys, m.basis(), &layout)?,
                effective_epsilon: 1.0 - eta.powi(i32::try_from(n).unwrap_or(i32::MAX)),
            })
        })
        .collect::<Result<Vec<_>, QmonError>>()?;

    let body = match args.format.unwrap_or(Format::Csv) {
        Format::Json => to_json(&rows),
        Format::Csv => {
            let mut s = String::from("n,trace_distance_to_dephased,irreality_bits,effective_epsilon\n");
            for r in &rows {
                s.push_str(&csv_line(&[
                    r.n.to_string(),
                    fmt_float(r.trace_distance_to_dephased),
                    fmt_float(r.irreality_bits),
                    fmt_float(r.effective_epsilon),
                ]));
            }
            s
        }
    };
    emit(args.out.as_deref(), &body)
}

pub fn cmd_fragments(mut args: FragmentsArgs) -> CliResult<()> {
    let file: FragmentsArgs = load_config(args.config.as_deref())?;
    overlay!(args, file; d, d_b, theta, eta, phases, n, m_max, state, seed, tol, backend, dim_cap, out, format);

    let d = dimension(args.d)?;
    let d_b = bystander(args.d_b)?;
    let source = phase_source(d, args.theta, args.eta, args.phases.clone())?;
    let n = args.n.ok_or_else(|| invalid("missing --n"))?;
    let m_max = args.m_max.unwrap_or(n);
    if m_max > n {
        return Err(QmonError::FragmentOutOfRange { m: m_max, n }.into());
    }
    let seed = args.seed.unwrap_or(0);
    let tol = tolerance(args.tol)?;
    let backend = args.backend.unwrap_or_default();
    let cap = args.dim_cap.unwrap_or(DEFAULT_DIM_CAP);
    let state = args.state.clone().unwrap_or(StateSpec::PureRandom);
    let rho = build_state(&state, d.get(), d_b, seed)?;
    let phases = resolve_phases(d, source, seed, tol)?;

    let model = EnvironmentModel::new(phases, n, d_b)?.with_dim_cap(cap);
    log::info!(
        "fragments d={} d_b={d_b} n={n} m_max={m_max} backend={backend}",
        d.get()
    );
    let profile = mutual_info_profile(&rho, &model, m_max, backend)?;
    let body = match args.format.unwrap_or(Format::Csv) {
        Format::Json => to_json(&profile),
        Format::Csv => profile.to_csv(),
    };
    emit(args.out.as_deref(), &body)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BaselineRow {
    pub theta: f64,
    pub eps_cmaybe: f64,
    #[serde(rename = "eps_generalT")]
    pub eps_general_t: f64,
    pub channel_distance: f64,
}

pub fn cmd_qubit_baseline(mut args: BaselineArgs) -> CliResult<()> {
    let file: BaselineArgs = load_config(args.config.as_deref())?;
    overlay!(args, file; thetas, points, states, seed, out, format);

    let grid = match (args.thetas.take(), args.points) {
        (Some(_), Some(_)) => return Err(invalid("give at most one of --thetas, --points")),
        (Some(thetas), None) => thetas,
        (None, points) => {
            let points = points.unwrap_or(DEFAULT_BASELINE_POINTS);
            match points {
                0 => Vec::new(),
                1 => vec![0.0],
                _ => (0..points)
                    .map(|k| std::f64::consts::FRAC_PI_2 * k as f64 / (points - 1) as f64)
                    .collect(),
            }
        }
    };
    if grid.is_empty() {
        return Err(invalid("angle grid is empty"));
    }
    if grid.iter().any(|t| !t.is_finite()) {
        return Err(invalid("angles must be finite"));
    }
    let n_states = args.states.unwrap_or(DEFAULT_BASELINE_STATES);
    if n_states == 0 {
        return Err(invalid("--states must be positive"));
    }
    let seed = args.seed.unwrap_or(0);

    log::info!("qubit baseline over {} angles", grid.len());
    let rows = grid
        .par_iter()
        .enumerate()
        .map(|(k, &theta)| {
            let mut rng = stream_rng(seed, k as u64);
            let states = (0..n_states)
                .map(|_| random_density_from(2, 2, &mut rng))
                .collect::<Result<Vec<_>, _>>()?;
            let (eps_cmaybe, eps_general_t) = compare_with_general_t(theta);
            Ok(BaselineRow {
                theta,
                eps_cmaybe,
                eps_general_t,
                channel_distance: channel_distance(theta, &states, 1)?,
            })
        })
        .collect::<Result<Vec<_>, QmonError>>()?;

    let body = match args.format.unwrap_or(Format::Csv) {
        Format::Json => to_json(&rows),
        Format::Csv => {
            let mut s = String::from("theta,eps_cmaybe,eps_generalT,channel_distance\n");
            for r in &rows {
                s.push_str(&csv_line(&[
                    fmt_float(r.theta),
                    fmt_float(r.eps_cmaybe),
                    fmt_float(r.eps_general_t),
                    fmt_float(r.channel_distance),
                ]));
            }
            s
        }
    };
    emit(args.out.as_deref(), &body)
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::SolvePhases(a) => cmd_solve_phases(a),
        Command::Convergence(a) => cmd_convergence(a),
        Command::Fragments(a) => cmd_fragments(a),
        Command::QubitBaseline(a) => cmd_qubit_baseline(a),
    }
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

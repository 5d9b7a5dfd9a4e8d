//! Command-line front end: `key = value` configuration, subcommands and CSV
//! output.
//!
//! Every CSV starts with `#` lines echoing the resolved configuration,
//! followed by a header row. Numbers are written with 17 significant
//! digits, so identical configurations give byte-identical files.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use statrs::function::erf::erfc;
use thiserror::Error;

use crate::analysis::{
    energy_balance_check, exponent_fit, memory_tail, model_a_residual, nonlocal_flux,
    AnalysisError, PowerFit, ResidualReport, TemperatureSource,
};
use crate::closedform::{
    neumann_classical, neumann_profile, similarity_solution, BoundaryData, ClosedFormError,
    FracParams, LambdaConvention, Material, SimilaritySolution,
};
use crate::fracops::{caputo_l1, FracOpsError, TimeSeries};
use crate::solver::{run, FrontPath, Grid1D, SimState, SolverError};
use crate::specfun::{gamma_fn, wright, SpecialError, WrightArgs, DEFAULT_TOL};

/// Which solution a run is built on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    /// Wright-function closed form with full Caputo memory.
    ClosedFormB,
    /// Numerical solution with memory from the front arrival time.
    SolverA,
    /// Classical erf solution (γ = 1).
    NeumannClassical,
}

impl Model {
    fn name(self) -> &'static str {
        match self {
            Model::ClosedFormB => "closed_form_b",
            Model::SolverA => "solver_a",
            Model::NeumannClassical => "neumann_classical",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`{}", suggestion.as_ref().map(|s| format!(" (did you mean `{s}`?)")).unwrap_or_default())]
    UnknownKey {
        key: String,
        line: usize,
        suggestion: Option<String>,
    },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { key: String, line: usize },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("line {line}: cannot parse `{key}` value `{value}` as {expected}")]
    Parse {
        key: String,
        line: usize,
        value: String,
        expected: &'static str,
    },
    #[error("line {line}: `{key}` = {value} is invalid: {requirement}")]
    Invalid {
        key: String,
        line: usize,
        value: String,
        requirement: &'static str,
    },
    #[error("option --{flag} {value} is invalid: {requirement}")]
    InvalidFlag {
        flag: &'static str,
        value: String,
        requirement: &'static str,
    },
    #[error("cannot read {path}: {reason}")]
    Read { path: String, reason: String },
}

/// Fully validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: Model,
    pub gamma: f64,
    pub tau: f64,
    pub rho: f64,
    pub c: f64,
    pub k: f64,
    pub l: f64,
    pub u0: f64,
    pub x_max: f64,
    pub nx: usize,
    pub t_max: f64,
    pub nt: usize,
    pub output: Option<PathBuf>,
    pub residuals: bool,
    pub energy_check: bool,
    pub exponent_fit: bool,
    pub lambda_convention: LambdaConvention,
    /// Number of profile snapshots written by `closed-form` and `simulate`.
    pub profiles: usize,
    pub sigma_tol: f64,
}

const REQUIRED: [&str; 11] = [
    "gamma", "tau", "rho", "c", "k", "l", "u0", "x_max", "nx", "t_max", "nt",
];
const OPTIONAL: [&str; 8] = [
    "model",
    "output",
    "residuals",
    "energy_check",
    "exponent_fit",
    "lambda_convention",
    "profiles",
    "sigma_tol",
];

fn suggest(key: &str) -> Option<String> {
    REQUIRED
        .iter()
        .chain(OPTIONAL.iter())
        .map(|k| (strsim::levenshtein(key, k), *k))
        .filter(|(d, _)| *d <= 3)
        .min()
        .map(|(_, k)| k.to_string())
}

struct Entry {
    key: String,
    value: String,
    line: usize,
}

impl Entry {
    fn parse_err(&self, expected: &'static str) -> ConfigError {
        ConfigError::Parse {
            key: self.key.clone(),
            line: self.line,
            value: self.value.clone(),
            expected,
        }
    }

    fn invalid(&self, requirement: &'static str) -> ConfigError {
        ConfigError::Invalid {
            key: self.key.clone(),
            line: self.line,
            value: self.value.clone(),
            requirement,
        }
    }

    fn real(&self) -> Result<f64, ConfigError> {
        self.value
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| self.parse_err("a finite real number"))
    }

    fn positive(&self) -> Result<f64, ConfigError> {
        let v = self.real()?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(self.invalid("must be positive"))
        }
    }

    fn count(&self, min: usize) -> Result<usize, ConfigError> {
        let v = self
            .value
            .parse::<usize>()
            .map_err(|_| self.parse_err("a non-negative integer"))?;
        if v >= min {
            Ok(v)
        } else if min == 8 {
            Err(self.invalid("must be at least 8"))
        } else {
            Err(self.invalid("must be at least 1"))
        }
    }

    fn flag(&self) -> Result<bool, ConfigError> {
        match self.value.as_str() {
            "true" | "yes" | "on" | "1" => Ok(true),
            "false" | "no" | "off" | "0" => Ok(false),
            _ => Err(self.parse_err("a boolean (true/false)")),
        }
    }
}

const GAMMA_RANGE: &str = "gamma must lie in (0, 1]";

/// Parses and validates `key = value` text; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut entries: Vec<Entry> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((key, value)) = body.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                text: body.to_string(),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                text: body.to_string(),
            });
        }
        if !REQUIRED.contains(&key) && !OPTIONAL.contains(&key) {
            return Err(ConfigError::UnknownKey {
                key: key.to_string(),
                line,
                suggestion: suggest(key),
            });
        }
        if entries.iter().any(|e| e.key == key) {
            return Err(ConfigError::Duplicate {
                key: key.to_string(),
                line,
            });
        }
        entries.push(Entry {
            key: key.to_string(),
            value: value.to_string(),
            line,
        });
    }
    let get = |key: &str| entries.iter().find(|e| e.key == key);
    let need = |key: &'static str| get(key).ok_or(ConfigError::Missing(key));

    let gamma_entry = need("gamma")?;
    let gamma = gamma_entry.real()?;
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(gamma_entry.invalid(GAMMA_RANGE));
    }
    let model = match get("model") {
        None => Model::ClosedFormB,
        Some(e) => match e.value.as_str() {
            "closed_form_b" => Model::ClosedFormB,
            "solver_a" => Model::SolverA,
            "neumann_classical" => Model::NeumannClassical,
            _ => return Err(e.parse_err("one of closed_form_b, solver_a, neumann_classical")),
        },
    };
    let lambda_convention = match get("lambda_convention") {
        None => LambdaConvention::Dimensional,
        Some(e) => match e.value.as_str() {
            "dimensional" => LambdaConvention::Dimensional,
            "alpha_power" => LambdaConvention::AlphaPower,
            _ => return Err(e.parse_err("one of dimensional, alpha_power")),
        },
    };
    let toggle = |key: &str| {
        get(key)
            .map(Entry::flag)
            .transpose()
            .map(|v| v.unwrap_or(false))
    };

    Ok(RunConfig {
        model,
        gamma,
        tau: need("tau")?.positive()?,
        rho: need("rho")?.positive()?,
        c: need("c")?.positive()?,
        k: need("k")?.positive()?,
        l: need("l")?.positive()?,
        u0: need("u0")?.positive()?,
        x_max: need("x_max")?.positive()?,
        nx: need("nx")?.count(8)?,
        t_max: need("t_max")?.positive()?,
        nt: need("nt")?.count(8)?,
        output: get("output").map(|e| PathBuf::from(&e.value)),
        residuals: toggle("residuals")?,
        energy_check: toggle("energy_check")?,
        exponent_fit: toggle("exponent_fit")?,
        lambda_convention,
        profiles: get("profiles")
            .map(|e| e.count(1))
            .transpose()?
            .unwrap_or(4),
        sigma_tol: get("sigma_tol")
            .map(Entry::positive)
            .transpose()?
            .unwrap_or(1e-14),
    })
}

impl RunConfig {
    pub fn material(&self) -> Material {
        Material {
            rho: self.rho,
            c: self.c,
            k: self.k,
            l: self.l,
        }
    }

    pub fn frac(&self) -> FracParams {
        FracParams {
            gamma: self.gamma,
            tau: self.tau,
        }
    }

    pub fn boundary(&self) -> BoundaryData {
        BoundaryData { u0: self.u0 }
    }

    pub fn grid(&self) -> Grid1D {
        Grid1D {
            x_max: self.x_max,
            nx: self.nx,
            t_max: self.t_max,
            nt: self.nt,
        }
    }

    pub fn stefan(&self) -> f64 {
        self.c * self.u0 / self.l
    }

    /// `key = value` lines of the resolved configuration (output location
    /// excluded so that runs into different directories compare equal).
    pub fn echo(&self) -> Vec<String> {
        let conv = match self.lambda_convention {
            LambdaConvention::Dimensional => "dimensional",
            LambdaConvention::AlphaPower => "alpha_power",
        };
        vec![
            format!("model = {}", self.model.name()),
            format!("gamma = {:?}", self.gamma),
            format!("tau = {:?}", self.tau),
            format!("rho = {:?}", self.rho),
            format!("c = {:?}", self.c),
            format!("k = {:?}", self.k),
            format!("l = {:?}", self.l),
            format!("u0 = {:?}", self.u0),
            format!("x_max = {:?}", self.x_max),
            format!("nx = {}", self.nx),
            format!("t_max = {:?}", self.t_max),
            format!("nt = {}", self.nt),
            format!("residuals = {}", self.residuals),
            format!("energy_check = {}", self.energy_check),
            format!("exponent_fit = {}", self.exponent_fit),
            format!("lambda_convention = {conv}"),
            format!("profiles = {}", self.profiles),
            format!("sigma_tol = {:?}", self.sigma_tol),
        ]
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write {path}: {reason}")]
    Write { path: String, reason: String },
    #[error("{0}")]
    Numerical(String),
    #[error("{0} selftest check(s) failed")]
    Selftest(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Write { .. } => 2,
            CliError::Numerical(_) => 3,
            CliError::Selftest(_) => 4,
        }
    }
}

macro_rules! numerical {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Numerical(e.to_string())
            }
        }
    )*};
}
numerical!(
    ClosedFormError,
    SolverError,
    AnalysisError,
    FracOpsError,
    SpecialError
);

#[derive(Parser)]
#[command(name = "fracstefan", version, about = "Time-fractional Stefan problems: closed forms, a front solver and residual diagnostics", long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form front and temperature profiles
    ClosedForm(CommonArgs),
    /// Numerical solution with memory from the front arrival time
    Simulate(CommonArgs),
    /// Residual of the arrival-time-windowed heat equation
    Residual(CommonArgs),
    /// Fractional global energy balance of a numerical run
    EnergyCheck(CommonArgs),
    /// Power-law fit of the front over the final time decade
    Exponent(CommonArgs),
    /// Closed form against the numerical solution on the same data
    Compare(CommonArgs),
    /// Quick invariant suite
    Selftest(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Configuration file (`key = value` lines)
    #[arg(long)]
    config: PathBuf,
    /// Output directory [default: ./out, or `output` from the config]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the fractional order
    #[arg(long)]
    gamma: Option<f64>,
    /// Override the Stefan number (sets u0 = ste·l/c)
    #[arg(long)]
    ste: Option<f64>,
    /// Override the similarity length scale convention
    #[arg(long, value_enum)]
    lambda_convention: Option<ConventionArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConventionArg {
    Dimensional,
    AlphaPower,
}

impl CommonArgs {
    fn resolve(&self) -> Result<(RunConfig, PathBuf), ConfigError> {
        let text = std::fs::read_to_string(&self.config).map_err(|e| ConfigError::Read {
            path: self.config.display().to_string(),
            reason: e.to_string(),
        })?;
        let mut cfg = parse_config(&text)?;
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g <= 1.0) {
                return Err(ConfigError::InvalidFlag {
                    flag: "gamma",
                    value: g.to_string(),
                    requirement: GAMMA_RANGE,
                });
            }
            cfg.gamma = g;
        }
        if let Some(ste) = self.ste {
            if !(ste > 0.0 && ste.is_finite()) {
                return Err(ConfigError::InvalidFlag {
                    flag: "ste",
                    value: ste.to_string(),
                    requirement: "must be positive",
                });
            }
            cfg.u0 = ste * cfg.l / cfg.c;
        }
        match self.lambda_convention {
            Some(ConventionArg::Dimensional) => {
                cfg.lambda_convention = LambdaConvention::Dimensional
            }
            Some(ConventionArg::AlphaPower) => cfg.lambda_convention = LambdaConvention::AlphaPower,
            None => {}
        }
        let out = self
            .out
            .clone()
            .or_else(|| cfg.output.clone())
            .unwrap_or_else(|| PathBuf::from("./out"));
        Ok((cfg, out))
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    let (name, args) = match &command {
        Command::ClosedForm(a) => ("closed-form", a),
        Command::Simulate(a) => ("simulate", a),
        Command::Residual(a) => ("residual", a),
        Command::EnergyCheck(a) => ("energy-check", a),
        Command::Exponent(a) => ("exponent", a),
        Command::Compare(a) => ("compare", a),
        Command::Selftest(a) => ("selftest", a),
    };
    let (cfg, out) = args.resolve()?;
    std::fs::create_dir_all(&out).map_err(|e| write_error(&out, e))?;
    let ctx = Output {
        dir: out,
        meta: std::iter::once(format!("fracstefan {name}"))
            .chain(cfg.echo())
            .collect(),
    };
    match command {
        Command::ClosedForm(_) => closed_form(&cfg, &ctx),
        Command::Simulate(_) => simulate(&cfg, &ctx),
        Command::Residual(_) => residual(&cfg, &ctx),
        Command::EnergyCheck(_) => energy(&cfg, &ctx),
        Command::Exponent(_) => exponent(&cfg, &ctx),
        Command::Compare(_) => compare(&cfg, &ctx),
        Command::Selftest(_) => selftest(&ctx),
    }
}

fn write_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Write {
        path: path.display().to_string(),
        reason: e.to_string(),
    }
}

struct Output {
    dir: PathBuf,
    meta: Vec<String>,
}

impl Output {
    fn text(&self, name: &str, body: &str) -> Result<(), CliError> {
        let mut s = String::new();
        for m in &self.meta {
            let _ = writeln!(s, "# {m}");
        }
        s.push_str(body);
        let path = self.dir.join(name);
        std::fs::write(&path, s).map_err(|e| write_error(&path, e))
    }

    fn csv(
        &self,
        name: &str,
        header: &str,
        rows: impl IntoIterator<Item = Vec<f64>>,
    ) -> Result<(), CliError> {
        let mut body = format!("{header}\n");
        for row in rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            body.push_str(&cells.join(","));
            body.push('\n');
        }
        self.text(name, &body)
    }
}

enum Closed {
    Wright(SimilaritySolution),
    Erf(SimilaritySolution, f64),
}

impl Closed {
    fn build(cfg: &RunConfig) -> Result<Self, CliError> {
        let (mat, bc) = (cfg.material(), cfg.boundary());
        Ok(match cfg.model {
            Model::NeumannClassical => {
                Closed::Erf(neumann_classical(&mat, &bc, cfg.sigma_tol)?, mat.alpha())
            }
            _ => Closed::Wright(similarity_solution(
                &mat,
                &cfg.frac(),
                &bc,
                cfg.lambda_convention,
                cfg.sigma_tol,
            )?),
        })
    }

    fn solution(&self) -> &SimilaritySolution {
        match self {
            Closed::Wright(s) | Closed::Erf(s, _) => s,
        }
    }

    fn u(&self, x: f64, t: f64) -> Result<f64, CliError> {
        Ok(match self {
            Closed::Wright(s) => s.u(x, t)?,
            Closed::Erf(s, alpha) => neumann_profile(s, *alpha, x, t),
        })
    }

    fn frac(&self, cfg: &RunConfig) -> FracParams {
        match self {
            Closed::Wright(_) => cfg.frac(),
            Closed::Erf(..) => FracParams {
                gamma: 1.0,
                tau: cfg.tau,
            },
        }
    }
}

fn profile_levels(cfg: &RunConfig) -> Vec<usize> {
    (1..=cfg.profiles)
        .map(|k| {
            ((k as f64 * cfg.nt as f64 / cfg.profiles as f64).round() as usize).clamp(1, cfg.nt)
        })
        .collect()
}

fn closed_front(sol: &SimilaritySolution, grid: &Grid1D) -> Result<FrontPath, CliError> {
    let times: Vec<f64> = (0..=grid.nt).map(|n| grid.t(n)).collect();
    Ok(FrontPath::from_fn(times, |t| sol.s(t))?)
}

fn closed_form(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let closed = Closed::build(cfg)?;
    let grid = cfg.grid();
    let sol = closed.solution();
    let front = closed_front(sol, &grid)?;
    write_front(out, &front)?;
    for (k, n) in profile_levels(cfg).into_iter().enumerate() {
        let t = grid.t(n);
        let rows = (0..=grid.nx)
            .map(|i| Ok(vec![grid.x(i), closed.u(grid.x(i), t)?]))
            .collect::<Result<Vec<_>, CliError>>()?;
        out.csv(&format!("profile_t{}.csv", k + 1), "x,u", rows)?;
    }
    println!(
        "sigma={:.12} lambda={:.12} s(t_max)={:.12}",
        sol.sigma,
        sol.lambda,
        sol.s(cfg.t_max)
    );
    if cfg.exponent_fit {
        write_fit(out, &exponent_fit(&front, (0.1 * cfg.t_max, cfg.t_max))?)?;
    }
    Ok(())
}

fn write_front(out: &Output, front: &FrontPath) -> Result<(), CliError> {
    out.csv(
        "front.csv",
        "t,s",
        front
            .times()
            .iter()
            .zip(front.positions())
            .map(|(&t, &s)| vec![t, s]),
    )
}

fn write_fit(out: &Output, fit: &PowerFit) -> Result<(), CliError> {
    let line = format!("p={:.4} A={:.6} r2={:.6}", fit.p, fit.a, fit.r2);
    println!("{line}");
    out.text(
        "exponent.txt",
        &format!("p,A,r2\n{:.16e},{:.16e},{:.16e}\n", fit.p, fit.a, fit.r2),
    )
}

fn simulation(cfg: &RunConfig) -> Result<SimState, CliError> {
    Ok(run(
        &cfg.material(),
        &cfg.frac(),
        &cfg.boundary(),
        &cfg.grid(),
    )?)
}

fn simulate(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let state = simulation(cfg)?;
    let grid = cfg.grid();
    write_front(out, &state.front)?;
    for (k, n) in profile_levels(cfg).into_iter().enumerate() {
        let row = &state.temperature[n];
        out.csv(
            &format!("profile_t{}.csv", k + 1),
            "x,u",
            row.iter().enumerate().map(|(i, &u)| vec![grid.x(i), u]),
        )?;
    }
    println!("s(t_max)={:.12}", state.front.positions()[grid.nt]);
    if cfg.energy_check {
        write_energy(cfg, out, &state)?;
    }
    if cfg.exponent_fit {
        write_fit(
            out,
            &exponent_fit(&state.front, (0.1 * cfg.t_max, cfg.t_max))?,
        )?;
    }
    if cfg.residuals {
        write_residual(out, &simulated_residual(cfg, &state)?)?;
    }
    Ok(())
}

/// 20 points: x at 20..80% of s(t) for t at 20..100% of the horizon.
fn residual_points(s: impl Fn(f64) -> f64, t_max: f64) -> Vec<(f64, f64)> {
    let mut pts = Vec::with_capacity(20);
    for j in 1..=5 {
        let t = 0.2 * j as f64 * t_max;
        for r in [0.2, 0.4, 0.6, 0.8] {
            pts.push((r * s(t), t));
        }
    }
    pts
}

fn simulated_residual(cfg: &RunConfig, state: &SimState) -> Result<ResidualReport, CliError> {
    let dx = state.grid.dx();
    let pts: Vec<(f64, f64)> = residual_points(|t| state.front.at(t), cfg.t_max)
        .into_iter()
        .filter(|&(x, t)| x >= 2.0 * dx && x + 3.0 * dx < state.front.at(t))
        .collect();
    if pts.is_empty() {
        return Err(CliError::Numerical(
            "grid too coarse: no residual point lies two cells inside the melt".into(),
        ));
    }
    Ok(model_a_residual(
        TemperatureSource::Simulation(state),
        &cfg.material(),
        &cfg.frac(),
        &pts,
    )?)
}

fn write_residual(out: &Output, report: &ResidualReport) -> Result<(), CliError> {
    let s = report.summary();
    println!(
        "residual max|r|={:.6e} mean|r|={:.6e} positive={} negative={}",
        s.max_abs, s.mean_abs, s.positive, s.negative
    );
    out.csv(
        "residual.csv",
        "x,t,value",
        report
            .points()
            .iter()
            .zip(report.values())
            .map(|(&(x, t), &v)| vec![x, t, v]),
    )
}

fn residual(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let report = match cfg.model {
        Model::SolverA => simulated_residual(cfg, &simulation(cfg)?)?,
        _ => {
            let closed = Closed::build(cfg)?;
            let sol = closed.solution();
            let pts = residual_points(|t| sol.s(t), cfg.t_max);
            model_a_residual(
                TemperatureSource::Similarity(sol),
                &cfg.material(),
                &closed.frac(cfg),
                &pts,
            )?
        }
    };
    write_residual(out, &report)
}

fn write_energy(cfg: &RunConfig, out: &Output, state: &SimState) -> Result<(), CliError> {
    let eb = energy_balance_check(state, &cfg.material(), &cfg.frac())?;
    println!(
        "energy max rel mismatch beyond level 5: {:.6e}",
        eb.max_mismatch_after(5)
    );
    out.csv(
        "energy.csv",
        "t,lhs,rhs,rel_mismatch",
        (0..eb.times.len()).map(|n| vec![eb.times[n], eb.lhs[n], eb.rhs[n], eb.rel_mismatch[n]]),
    )
}

fn energy(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    write_energy(cfg, out, &simulation(cfg)?)
}

fn exponent(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let front = match cfg.model {
        Model::SolverA => simulation(cfg)?.front,
        _ => closed_front(Closed::build(cfg)?.solution(), &cfg.grid())?,
    };
    write_fit(out, &exponent_fit(&front, (0.1 * cfg.t_max, cfg.t_max))?)
}

fn compare(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let (mat, frac) = (cfg.material(), cfg.frac());
    let sol = similarity_solution(
        &mat,
        &frac,
        &cfg.boundary(),
        cfg.lambda_convention,
        cfg.sigma_tol,
    )?;
    let state = simulation(cfg)?;
    let front = &state.front;
    out.csv(
        "compare_front.csv",
        "t,s_modelA,s_modelB,rel_diff",
        front.times().iter().zip(front.positions()).map(|(&t, &a)| {
            let b = sol.s(t);
            let rel = if b > 0.0 { (a - b).abs() / b } else { 0.0 };
            vec![t, a, b, rel]
        }),
    )?;
    let last = front.len() - 1;
    println!(
        "s_A(t_max)={:.12} s_B(t_max)={:.12}",
        front.positions()[last],
        sol.s(cfg.t_max)
    );
    let pts = residual_points(|t| sol.s(t), cfg.t_max);
    let report = model_a_residual(TemperatureSource::Similarity(&sol), &mat, &frac, &pts)?;
    write_residual(out, &report)
}

struct Check {
    name: &'static str,
    value: f64,
    limit: f64,
    pass: bool,
}

fn below(name: &'static str, value: f64, limit: f64) -> Check {
    Check {
        name,
        value,
        limit,
        pass: value < limit,
    }
}

fn above(name: &'static str, value: f64, limit: f64) -> Check {
    Check {
        name,
        value,
        limit,
        pass: value > limit,
    }
}

fn selftest_checks() -> Result<Vec<Check>, CliError> {
    let mut checks = Vec::new();
    let unit = Material::unit();

    let erfc_err = (0..=12)
        .map(|j| {
            let x = 0.5 * j as f64;
            let w = wright(WrightArgs::new(-x, -0.5, 1.0)?, DEFAULT_TOL)?;
            Ok((w - erfc(0.5 * x)).abs())
        })
        .collect::<Result<Vec<f64>, CliError>>()?
        .into_iter()
        .fold(0.0, f64::max);
    checks.push(below("wright_erfc_identity", erfc_err, 1e-10));

    let bc = BoundaryData::new(1.0)?;
    let classical = FracParams::new(1.0, 1.0)?;
    let b = similarity_solution(&unit, &classical, &bc, LambdaConvention::Dimensional, 1e-14)?;
    let n = neumann_classical(&unit, &bc, 1e-14)?;
    checks.push(below(
        "classical_sigma_agreement",
        (b.sigma - n.sigma).abs(),
        1e-8,
    ));

    let ramp = TimeSeries::sample(|t| t, 0.01, 100)?;
    let d = caputo_l1(&ramp, 0.5)?;
    let exact = 1.0 / gamma_fn(1.5)?;
    checks.push(below("l1_exact_on_linear", (d[100] - exact).abs(), 1e-12));

    let pts = [(0.5 * b.s(1.0), 1.0)];
    let r = model_a_residual(TemperatureSource::Similarity(&b), &unit, &classical, &pts)?;
    checks.push(below(
        "classical_models_coincide",
        r.summary().max_abs,
        1e-4,
    ));

    let half = FracParams::new(0.5, 1.0)?;
    let sol = similarity_solution(&unit, &half, &bc, LambdaConvention::Dimensional, 1e-14)?;
    let (x, t) = (0.5 * sol.s(1.0), 1.0);
    let tail = memory_tail(&sol, &unit, &half, x, t)?;
    let windowed = model_a_residual(TemperatureSource::Similarity(&sol), &unit, &half, &[(x, t)])?;
    checks.push(above("memory_tail_positive", tail, 0.0));
    checks.push(below(
        "windowed_residual_equals_minus_tail",
        (windowed.values()[0] + tail).abs() / tail,
        1e-3,
    ));

    let grid = Grid1D::new(1.5, 96, 0.2, 400)?;
    let state = run(&unit, &half, &bc, &grid)?;
    let out_of_range = state
        .temperature
        .iter()
        .flatten()
        .map(|&u| if u < 0.0 { -u } else { (u - 1.0).max(0.0) })
        .fold(0.0, f64::max);
    checks.push(below("solver_maximum_principle", out_of_range, 1e-12));
    let retreat = state
        .front
        .positions()
        .windows(2)
        .map(|w| (w[0] - w[1]).max(0.0))
        .fold(0.0, f64::max);
    checks.push(below("solver_front_monotone", retreat, 1e-300));
    let eb = energy_balance_check(&state, &unit, &half)?;
    checks.push(below(
        "solver_energy_balance",
        eb.max_mismatch_after(5),
        0.05,
    ));

    let times: Vec<f64> = (1..=40).map(|j| 0.05 * j as f64).collect();
    let path = FrontPath::from_fn(times, |t| 2.5 * t.powf(0.35))?;
    let fit = exponent_fit(&path, (0.0, 10.0))?;
    checks.push(below("exponent_fit_exact", (fit.p - 0.35).abs(), 1e-12));

    let q = TimeSeries::sample(|t| 1.0 + t, 1e-3, 1000)?;
    let flux = nonlocal_flux(&q, &FracParams::new(0.999, 1.0)?)?;
    checks.push(below(
        "nonlocal_flux_near_local",
        (flux[1000] - 2.0).abs() / 2.0,
        0.01,
    ));
    Ok(checks)
}

fn selftest(out: &Output) -> Result<(), CliError> {
    let checks = selftest_checks()?;
    let mut body = String::from("check,value,limit,status\n");
    let mut failed = 0;
    for c in &checks {
        let status = if c.pass { "PASS" } else { "FAIL" };
        if !c.pass {
            failed += 1;
        }
        println!(
            "{status} {} value={:.6e} limit={:.1e}",
            c.name, c.value, c.limit
        );
        let _ = writeln!(
            body,
            "{},{:.16e},{:.16e},{status}",
            c.name, c.value, c.limit
        );
    }
    out.text("selftest.csv", &body)?;
    if failed > 0 {
        return Err(CliError::Selftest(failed));
    }
    Ok(())
}

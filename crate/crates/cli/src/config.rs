//! Experiment configuration: INI sections `[grid] [problem] [solver]
//! [optimize] [run] [exponents] [counterexample]`, flat `key = value` pairs.
//!
//! Unknown sections and keys are rejected so that typos surface as config
//! errors instead of silently falling back to defaults.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::{Ini, ParseOption, Properties};
use semicontrol::SolveOptions;

use crate::expr::Expr;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

fn key_err(section: &str, key: &str, msg: impl std::fmt::Display) -> ConfigError {
    ConfigError(format!("[{section}] {key}: {msg}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    State,
    Adjoint,
    Optimize,
    Homotopy,
    Counterexample,
    Exponents,
    Verify,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::State,
        Command::Adjoint,
        Command::Optimize,
        Command::Homotopy,
        Command::Counterexample,
        Command::Exponents,
        Command::Verify,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Command::State => "state",
            Command::Adjoint => "adjoint",
            Command::Optimize => "optimize",
            Command::Homotopy => "homotopy",
            Command::Counterexample => "counterexample",
            Command::Exponents => "exponents",
            Command::Verify => "verify",
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Command::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| {
            let names: Vec<_> = Command::ALL.iter().map(Command::name).collect();
            format!("unknown command '{s}' (expected one of {})", names.join(", "))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Parabolic,
    Elliptic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonlinearityId {
    Zero,
    Cubic,
    CubicMinusLinear,
    Expm1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub n: usize,
    pub nx: Vec<usize>,
    pub lengths: Vec<f64>,
    pub nt: Option<usize>,
    pub t_final: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub kind: ProblemKind,
    pub alpha: f64,
    pub nonlinearity: NonlinearityId,
    pub c: f64,
    pub lambda: f64,
    /// Declared lower slope bound, checked against the catalog entry.
    pub lambda_f: Option<f64>,
    /// Diagonal of the constant diffusion matrix.
    pub a: Vec<f64>,
    pub a0: Expr,
    /// Spatial weight of the elliptic nonlinearity.
    pub weight: Expr,
    pub y0: Expr,
    pub yd: Expr,
    pub g: Expr,
    /// Control for `state` and `adjoint`.
    pub u: Expr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecutionMode {
    Sequential,
    Parallel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeConfig {
    pub grad_tol: f64,
    pub max_iter: usize,
    pub m_schedule: Vec<f64>,
    pub rho: Option<f64>,
    /// Starting control.
    pub u0: Expr,
    pub execution: ExecutionMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Control file checked by `verify`; defaults to `<output_dir>/u.csv`.
    pub artifact: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentsConfig {
    pub n: Option<u32>,
    pub r: Option<String>,
    pub kind: ProblemKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleConfig {
    pub n: usize,
    pub k: usize,
    pub samples: usize,
    pub with_cubic: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub grid: Option<GridConfig>,
    pub problem: Option<ProblemConfig>,
    pub solver: SolveOptions,
    pub optimize: OptimizeConfig,
    pub run: RunConfig,
    pub exponents: ExponentsConfig,
    pub counterexample: CounterexampleConfig,
}

/// Typed access to one section that remembers which keys were consumed.
struct Section<'a> {
    name: &'a str,
    props: Option<&'a Properties>,
    used: Vec<&'static str>,
}

impl<'a> Section<'a> {
    fn raw(&mut self, key: &'static str) -> Option<&'a str> {
        self.used.push(key);
        self.props.and_then(|p| p.get(key)).map(str::trim)
    }

    fn parsed<T: FromStr>(&mut self, key: &'static str, what: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| key_err(self.name, key, format!("'{v}' is not {what}"))),
        }
    }

    fn required<T: FromStr>(&mut self, key: &'static str, what: &str) -> Result<T> {
        self.parsed(key, what)?.ok_or_else(|| key_err(self.name, key, "missing required key"))
    }

    fn real(&mut self, key: &'static str) -> Result<Option<f64>> {
        match self.parsed::<f64>(key, "a number")? {
            Some(v) if !v.is_finite() => Err(key_err(self.name, key, "must be finite")),
            v => Ok(v),
        }
    }

    fn positive(&mut self, key: &'static str) -> Result<Option<f64>> {
        match self.real(key)? {
            Some(v) if v <= 0.0 => Err(key_err(self.name, key, format!("{v} must be positive"))),
            v => Ok(v),
        }
    }

    fn count(&mut self, key: &'static str, min: usize) -> Result<Option<usize>> {
        match self.parsed::<usize>(key, "a nonnegative integer")? {
            Some(v) if v < min => Err(key_err(self.name, key, format!("{v} must be at least {min}"))),
            v => Ok(v),
        }
    }

    fn list<T: FromStr>(&mut self, key: &'static str, what: &str) -> Result<Option<Vec<T>>> {
        let Some(v) = self.raw(key) else { return Ok(None) };
        v.split(',')
            .map(|item| {
                let item = item.trim();
                item.parse().map_err(|_| key_err(self.name, key, format!("'{item}' is not {what}")))
            })
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }

    fn expr(&mut self, key: &'static str, default: Expr) -> Result<Expr> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => Expr::parse(v).map_err(|m| key_err(self.name, key, m)),
        }
    }

    fn boolean(&mut self, key: &'static str) -> Result<Option<bool>> {
        match self.raw(key) {
            None => Ok(None),
            Some("true" | "yes" | "1") => Ok(Some(true)),
            Some("false" | "no" | "0") => Ok(Some(false)),
            Some(v) => Err(key_err(self.name, key, format!("'{v}' is not a boolean"))),
        }
    }

    /// Rejects keys that no accessor asked for, and repeated keys.
    fn finish(self) -> Result<()> {
        let Some(props) = self.props else { return Ok(()) };
        for (k, _) in props.iter() {
            if !self.used.contains(&k) {
                return Err(key_err(self.name, k, "unknown key"));
            }
            if props.get_all(k).count() > 1 {
                return Err(key_err(self.name, k, "key given more than once"));
            }
        }
        Ok(())
    }
}

const SECTIONS: [&str; 7] = ["grid", "problem", "solver", "optimize", "run", "exponents", "counterexample"];

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config '{}': {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        if cfg.run.output_dir.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.run.output_dir = dir.join(&cfg.run.output_dir);
            }
        }
        if let Some(a) = cfg.run.artifact.as_mut().filter(|a| a.is_relative()) {
            if let Some(dir) = path.parent() {
                *a = dir.join(&*a);
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let opt = ParseOption { enabled_quote: false, enabled_escape: false, ..ParseOption::default() };
        let ini = Ini::load_from_str_opt(text, opt)
            .map_err(|e| ConfigError(format!("config syntax error at line {}: {}", e.line, e.msg)))?;
        for name in ini.sections() {
            match name {
                None => {
                    if let Some((k, _)) = ini.general_section().iter().next() {
                        return Err(ConfigError(format!("{k}: key outside of any section")));
                    }
                }
                Some(s) if !SECTIONS.contains(&s) => {
                    return Err(ConfigError(format!("[{s}]: unknown section (expected one of {})", SECTIONS.join(", "))));
                }
                Some(s) if ini.section_all(Some(s)).count() > 1 => {
                    return Err(ConfigError(format!("[{s}]: section given more than once")));
                }
                Some(_) => {}
            }
        }
        let section = |name: &'static str| Section { name, props: ini.section(Some(name)), used: vec![] };

        let grid = match ini.section(Some("grid")) {
            None => None,
            Some(_) => Some(parse_grid(section("grid"))?),
        };
        let problem = match ini.section(Some("problem")) {
            None => None,
            Some(_) => Some(parse_problem(section("problem"), grid.as_ref())?),
        };
        let solver = parse_solver(section("solver"))?;
        let optimize = parse_optimize(section("optimize"))?;
        let run = parse_run(section("run"))?;
        let exponents = parse_exponents(section("exponents"))?;
        let counterexample = parse_counterexample(section("counterexample"))?;
        Ok(Self { grid, problem, solver, optimize, run, exponents, counterexample })
    }

    pub fn grid(&self) -> Result<&GridConfig> {
        self.grid.as_ref().ok_or_else(|| ConfigError("[grid]: missing section".into()))
    }

    pub fn problem(&self) -> Result<&ProblemConfig> {
        self.problem.as_ref().ok_or_else(|| ConfigError("[problem]: missing section".into()))
    }

    pub fn optimize_options(&self) -> semicontrol::optimize::OptimizeOptions {
        semicontrol::optimize::OptimizeOptions {
            grad_tol: self.optimize.grad_tol,
            max_iter: self.optimize.max_iter,
            m_schedule: self.optimize.m_schedule.clone(),
            rho: self.optimize.rho,
            solve: self.solver,
            ..Default::default()
        }
    }
}

/// A scalar, or one entry per axis.
fn per_axis<T: Clone>(v: Vec<T>, n: usize, key: &'static str) -> Result<Vec<T>> {
    match v.len() {
        1 => Ok(vec![v[0].clone(); n]),
        len if len == n => Ok(v),
        len => Err(key_err("grid", key, format!("expected 1 or {n} values, found {len}"))),
    }
}

fn parse_grid(mut s: Section) -> Result<GridConfig> {
    let n: usize = s.required("n", "an integer")?;
    if !(1..=3).contains(&n) {
        return Err(key_err("grid", "n", format!("dimension {n} not in 1..=3")));
    }
    let nx = s.list::<usize>("nx", "a node count")?.ok_or_else(|| key_err("grid", "nx", "missing required key"))?;
    let nx = per_axis(nx, n, "nx")?;
    if let Some(v) = nx.iter().find(|v| **v < 3) {
        return Err(key_err("grid", "nx", format!("{v} nodes per axis; need at least 3")));
    }
    let lengths = per_axis(s.list::<f64>("L", "a length")?.unwrap_or_else(|| vec![1.0]), n, "L")?;
    if let Some(v) = lengths.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(key_err("grid", "L", format!("length {v} must be positive")));
    }
    let nt = s.count("nt", 1)?;
    let t_final = s.positive("T")?;
    s.finish()?;
    Ok(GridConfig { n, nx, lengths, nt, t_final })
}

fn parse_kind(s: &mut Section, key: &'static str) -> Result<Option<ProblemKind>> {
    match s.raw(key) {
        None => Ok(None),
        Some("parabolic") => Ok(Some(ProblemKind::Parabolic)),
        Some("elliptic") => Ok(Some(ProblemKind::Elliptic)),
        Some(v) => Err(key_err(s.name, key, format!("'{v}' is not parabolic or elliptic"))),
    }
}

fn parse_problem(mut s: Section, grid: Option<&GridConfig>) -> Result<ProblemConfig> {
    let kind = parse_kind(&mut s, "kind")?.ok_or_else(|| key_err("problem", "kind", "missing required key"))?;
    let alpha = s.positive("alpha")?.ok_or_else(|| key_err("problem", "alpha", "missing required key"))?;
    let nonlinearity = match s.raw("nonlinearity").unwrap_or("zero") {
        "zero" => NonlinearityId::Zero,
        "cubic" => NonlinearityId::Cubic,
        "cubic_minus_linear" => NonlinearityId::CubicMinusLinear,
        "expm1" => NonlinearityId::Expm1,
        v => {
            return Err(key_err(
                "problem",
                "nonlinearity",
                format!("unknown id '{v}' (expected zero, cubic, cubic_minus_linear, expm1)"),
            ))
        }
    };
    let c = s.real("c")?.unwrap_or(1.0);
    if c < 0.0 {
        return Err(key_err("problem", "c", format!("{c} must be nonnegative")));
    }
    let lambda = s.real("lambda")?.unwrap_or(0.0);
    if lambda < 0.0 {
        return Err(key_err("problem", "lambda", format!("{lambda} must be nonnegative")));
    }
    let lambda_f = s.real("lambda_f")?;
    if let Some(l) = lambda_f.filter(|l| *l < 0.0) {
        return Err(key_err("problem", "lambda_f", format!("{l} must be nonnegative")));
    }
    let a = s.list::<f64>("a", "a number")?.unwrap_or_else(|| vec![1.0]);
    let a0_default = match kind {
        ProblemKind::Parabolic => Expr::Zero,
        ProblemKind::Elliptic => Expr::One,
    };
    let mut exprs = vec![];
    let mut expr = |s: &mut Section, key: &'static str, default: Expr| -> Result<Expr> {
        let e = s.expr(key, default)?;
        exprs.push((key, e));
        Ok(e)
    };
    let a0 = expr(&mut s, "a0", a0_default)?;
    let weight = expr(&mut s, "weight", Expr::One)?;
    let y0 = expr(&mut s, "y0", Expr::Zero)?;
    let yd = expr(&mut s, "yd", Expr::Zero)?;
    let g = expr(&mut s, "g", Expr::Zero)?;
    let u = expr(&mut s, "u", Expr::Zero)?;
    s.finish()?;
    if let Some(grid) = grid {
        for (key, e) in exprs {
            e.check_dim(grid.n).map_err(|m| key_err("problem", key, m))?;
        }
        let a = per_axis(a.clone(), grid.n, "a").map_err(|_| {
            key_err("problem", "a", format!("expected 1 or {} diffusion entries, found {}", grid.n, a.len()))
        })?;
        if let Some(v) = a.iter().find(|v| !(**v > 0.0)) {
            return Err(key_err("problem", "a", format!("diffusion entry {v} must be positive")));
        }
    }
    Ok(ProblemConfig { kind, alpha, nonlinearity, c, lambda, lambda_f, a, a0, weight, y0, yd, g, u })
}

fn parse_solver(mut s: Section) -> Result<SolveOptions> {
    let d = SolveOptions::default();
    let out = SolveOptions {
        newton_tol: s.positive("newton_tol")?.unwrap_or(d.newton_tol),
        max_newton: s.count("max_newton", 1)?.unwrap_or(d.max_newton),
        linear_tol: s.positive("linear_tol")?.unwrap_or(d.linear_tol),
    };
    s.finish()?;
    Ok(out)
}

fn parse_optimize(mut s: Section) -> Result<OptimizeConfig> {
    let d = semicontrol::optimize::OptimizeOptions::default();
    let grad_tol = s.positive("grad_tol")?.unwrap_or(d.grad_tol);
    let max_iter = s.count("max_iter", 1)?.unwrap_or(d.max_iter);
    let m_schedule = s.list::<f64>("M_schedule", "a box level")?.unwrap_or(d.m_schedule);
    if let Some(m) = m_schedule.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
        return Err(key_err("optimize", "M_schedule", format!("box level {m} must be positive")));
    }
    if m_schedule.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(key_err("optimize", "M_schedule", "levels must be strictly increasing"));
    }
    let rho = s.positive("rho")?;
    let u0 = s.expr("u0", Expr::Zero)?;
    let execution = match s.raw("execution").unwrap_or("sequential") {
        "sequential" => ExecutionMode::Sequential,
        "parallel" => ExecutionMode::Parallel,
        v => return Err(key_err("optimize", "execution", format!("'{v}' is not sequential or parallel"))),
    };
    s.finish()?;
    Ok(OptimizeConfig { grad_tol, max_iter, m_schedule, rho, u0, execution })
}

fn parse_run(mut s: Section) -> Result<RunConfig> {
    let command = match s.raw("command") {
        None => None,
        Some(v) => Some(v.parse::<Command>().map_err(|m| key_err("run", "command", m))?),
    };
    let seed = s.parsed::<u64>("seed", "a nonnegative integer")?.unwrap_or(0);
    let output_dir = PathBuf::from(s.raw("output_dir").unwrap_or("out"));
    let artifact = s.raw("artifact").map(PathBuf::from);
    s.finish()?;
    Ok(RunConfig { command, seed, output_dir, artifact })
}

fn parse_exponents(mut s: Section) -> Result<ExponentsConfig> {
    let n = s.parsed::<u32>("n", "a positive integer")?;
    let r = s.raw("r").map(str::to_string);
    let kind = parse_kind(&mut s, "kind")?.unwrap_or(ProblemKind::Parabolic);
    s.finish()?;
    Ok(ExponentsConfig { n, r, kind })
}

fn parse_counterexample(mut s: Section) -> Result<CounterexampleConfig> {
    let n = s.parsed::<usize>("n", "an integer")?.unwrap_or(2);
    if !(n == 2 || n == 3) {
        return Err(key_err("counterexample", "n", format!("{n} is not 2 or 3")));
    }
    let k = s.count("K", 1)?.unwrap_or(8);
    let samples = s.count("samples", 2)?.unwrap_or(9);
    let with_cubic = s.boolean("with_cubic")?.unwrap_or(true);
    s.finish()?;
    Ok(CounterexampleConfig { n, k, samples, with_cubic })
}

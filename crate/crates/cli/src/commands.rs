use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use semicontrol::analysis::{
    bootstrap_steps, control_norm_sq_series, counterexample_norm_series, elliptic_exponents, harmonic,
    min_on_cylinder, parabolic_exponent, parse_rational, ExponentReport, SeriesKind,
};
use semicontrol::elliptic::EllipticProblem;
use semicontrol::field::{BoundaryField, Field, SpaceTimeField, SpatialField};
use semicontrol::io::{field_to_csv, format_sci, parse_field_csv, CsvField, Report};
use semicontrol::optimize::{self, ControlProblem, Execution, OptimizationResult, Status};
use semicontrol::parabolic::ParabolicProblem;
use semicontrol::{check_nonlinearity, Diffusion, EllipticCoefficients, GridSpec, Nonlinearity, SpatialNonlinearity};

use crate::config::{Command, ExecutionMode, ExperimentConfig, NonlinearityId, ProblemConfig, ProblemKind};
use crate::expr::Expr;
use crate::{ExitCode, Failure, Outcome};

type Result<T> = std::result::Result<T, Failure>;

// Separate random streams per config key so that e.g. `u` and `u0` differ.
const STREAM_A0: u64 = 1;
const STREAM_WEIGHT: u64 = 2;
const STREAM_Y0: u64 = 3;
const STREAM_YD: u64 = 4;
const STREAM_G: u64 = 5;
const STREAM_U: u64 = 6;
const STREAM_U0: u64 = 7;

/// Radius over which the configured nonlinearity is checked.
const CHECK_RADIUS: f64 = 1e3;
const CHECK_SAMPLES: usize = 20_001;

/// Tolerance for a stored objective re-confirmed by `verify`.
const VERIFY_J_RTOL: f64 = 1e-8;

pub(crate) fn dispatch(cfg: &ExperimentConfig, command: Command, threads: Option<usize>) -> Result<Outcome> {
    let mut out = Artifacts::new(&cfg.run.output_dir);
    let code = match command {
        Command::Exponents => exponents(cfg, &mut out)?,
        Command::Counterexample => counterexample(cfg, &mut out)?,
        _ => match build(cfg)? {
            Built::Parabolic(p, u, u0) => problem_command(&p, &u, &u0, cfg, command, threads, &mut out)?,
            Built::Elliptic(p, u, u0) => problem_command(&p, &u, &u0, cfg, command, threads, &mut out)?,
        },
    };
    Ok(Outcome { code, files: out.files, summary: out.summary })
}

/// Collects written files and the one-line-per-fact summary printed by the binary.
struct Artifacts {
    dir: PathBuf,
    files: Vec<PathBuf>,
    summary: String,
}

impl Artifacts {
    fn new(dir: &Path) -> Self {
        Self { dir: dir.to_path_buf(), files: vec![], summary: String::new() }
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let fail = |e: std::io::Error| Failure::config(format!("[run] output_dir: cannot write '{}': {e}", self.dir.display()));
        std::fs::create_dir_all(&self.dir).map_err(fail)?;
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(fail)?;
        self.files.push(path);
        Ok(())
    }

    fn field<F: CsvField + ?Sized>(&mut self, name: &str, field: &F) -> Result<()> {
        self.write(name, &field_to_csv(field))
    }

    fn report(&mut self, name: &str, report: &Report) -> Result<()> {
        for (k, v) in report.entries() {
            let _ = writeln!(self.summary, "{k}={v}");
        }
        self.write(name, &report.render())
    }
}

enum Built {
    Parabolic(ParabolicProblem, SpaceTimeField, SpaceTimeField),
    Elliptic(EllipticProblem, BoundaryField, BoundaryField),
}

fn spatial_grid(cfg: &ExperimentConfig) -> Result<GridSpec> {
    let g = cfg.grid()?;
    GridSpec::spatial(&g.lengths, &g.nx).map_err(|e| Failure::from_core("[grid]", e))
}

fn nonlinearity(p: &ProblemConfig) -> Result<Nonlinearity> {
    let core = |e| Failure::from_core("[problem] nonlinearity", e);
    if p.lambda != 0.0 && p.nonlinearity != NonlinearityId::CubicMinusLinear {
        return Err(Failure::config("[problem] lambda: only used by nonlinearity = cubic_minus_linear"));
    }
    let mut f = match p.nonlinearity {
        NonlinearityId::Zero => Nonlinearity::zero(),
        NonlinearityId::Cubic => Nonlinearity::cubic(p.c).map_err(core)?,
        NonlinearityId::CubicMinusLinear => Nonlinearity::cubic_minus_linear(p.c, p.lambda).map_err(core)?,
        NonlinearityId::Expm1 => Nonlinearity::expm1(p.c).map_err(core)?,
    };
    if let Some(l) = p.lambda_f {
        f = f.with_lambda_f(l);
    }
    check_nonlinearity(&f, CHECK_RADIUS, CHECK_SAMPLES).map_err(|e| Failure::from_core("[problem] lambda_f", e))?;
    Ok(f)
}

fn coefficients(p: &ProblemConfig, grid: GridSpec, seed: u64) -> Result<EllipticCoefficients> {
    // `a` is either one value for every axis or one per axis (checked at parse time).
    let mut a = [[0.0; 3]; 3];
    for (i, row) in a.iter_mut().enumerate().take(grid.dim()) {
        row[i] = if p.a.len() == 1 { p.a[0] } else { p.a[i] };
    }
    let a0 = spatial(&p.a0, grid, seed, STREAM_A0, "[problem] a0")?;
    EllipticCoefficients::new(grid, Diffusion::Constant(a), a0).map_err(|e| Failure::from_core("[problem] a0", e))
}

fn all_nodes(grid: &GridSpec) -> Vec<usize> {
    (0..grid.node_count()).collect()
}

fn spatial(e: &Expr, grid: GridSpec, seed: u64, stream: u64, key: &str) -> Result<SpatialField> {
    let v = e.sample(&grid, &all_nodes(&grid), 1, seed, stream);
    SpatialField::new(grid, v).map_err(|err| Failure::from_core(key, err))
}

fn space_time(e: &Expr, grid: GridSpec, seed: u64, stream: u64, key: &str) -> Result<SpaceTimeField> {
    let v = e.sample(&grid, &all_nodes(&grid), grid.steps() + 1, seed, stream);
    SpaceTimeField::new(grid, v).map_err(|err| Failure::from_core(key, err))
}

fn boundary(e: &Expr, grid: GridSpec, seed: u64, stream: u64, key: &str) -> Result<BoundaryField> {
    let v = e.sample(&grid, &grid.boundary_nodes(), 1, seed, stream);
    BoundaryField::new(grid, v).map_err(|err| Failure::from_core(key, err))
}

fn build(cfg: &ExperimentConfig) -> Result<Built> {
    let p = cfg.problem()?;
    let seed = cfg.run.seed;
    let space = spatial_grid(cfg)?;
    cfg.optimize.u0.check_dim(space.dim()).map_err(|m| Failure::config(format!("[optimize] u0: {m}")))?;
    let f = nonlinearity(p)?;
    let coeffs = coefficients(p, space, seed)?;
    match p.kind {
        ProblemKind::Parabolic => {
            let g = cfg.grid()?;
            let nt = g.nt.ok_or_else(|| Failure::config("[grid] nt: required for parabolic problems"))?;
            let t = g.t_final.ok_or_else(|| Failure::config("[grid] T: required for parabolic problems"))?;
            let grid = space.with_time(nt, t).map_err(|e| Failure::from_core("[grid]", e))?;
            let y0 = spatial(&p.y0, space, seed, STREAM_Y0, "[problem] y0")?;
            let yd = space_time(&p.yd, grid, seed, STREAM_YD, "[problem] yd")?;
            let problem = ParabolicProblem::new(grid, coeffs, f, y0, yd, p.alpha)
                .map_err(|e| Failure::from_core("[problem] setup", e))?;
            let u = space_time(&p.u, grid, seed, STREAM_U, "[problem] u")?;
            let u0 = space_time(&cfg.optimize.u0, grid, seed, STREAM_U0, "[optimize] u0")?;
            Ok(Built::Parabolic(problem, u, u0))
        }
        ProblemKind::Elliptic => {
            let weight = spatial(&p.weight, space, seed, STREAM_WEIGHT, "[problem] weight")?;
            let f = SpatialNonlinearity::new(f, weight).map_err(|e| Failure::from_core("[problem] weight", e))?;
            let g = spatial(&p.g, space, seed, STREAM_G, "[problem] g")?;
            let yd = spatial(&p.yd, space, seed, STREAM_YD, "[problem] yd")?;
            let problem = EllipticProblem::new(space, coeffs, f, g, yd, p.alpha)
                .map_err(|e| Failure::from_core("[problem] setup", e))?;
            let u = boundary(&p.u, space, seed, STREAM_U, "[problem] u")?;
            let u0 = boundary(&cfg.optimize.u0, space, seed, STREAM_U0, "[optimize] u0")?;
            Ok(Built::Elliptic(problem, u, u0))
        }
    }
}

/// The fixed report keys shared by every problem command.
struct Summary<'a> {
    j: f64,
    grad_norm: f64,
    iters: usize,
    u_linf: f64,
    y_linf: f64,
    m_active: bool,
    ball_active: bool,
    status: &'a str,
}

impl Summary<'_> {
    fn from_optimality<'a>(rep: &optimize::OptimalityReport, status: &'a str) -> Summary<'a> {
        Summary {
            j: rep.objective,
            grad_norm: rep.grad_norm,
            iters: 0,
            u_linf: rep.u_linf,
            y_linf: rep.y_linf,
            m_active: false,
            ball_active: false,
            status,
        }
    }

    fn from_result<P: ControlProblem + ?Sized>(res: &OptimizationResult<P>) -> Summary<'static> {
        Summary {
            j: res.objective,
            grad_norm: res.residual(),
            iters: res.iterations,
            u_linf: linf(res.u.values()),
            y_linf: linf(res.y.values()),
            m_active: res.m_active,
            ball_active: res.ball_active,
            status: res.status.as_str(),
        }
    }

    fn report(&self) -> Report {
        let mut r = Report::new();
        r.set_f64("J", self.j)
            .set_f64("grad_norm", self.grad_norm)
            .set("iters", self.iters.to_string())
            .set_f64("u_linf", self.u_linf)
            .set_f64("y_linf", self.y_linf)
            .set("M_active", self.m_active.to_string())
            .set("ball_active", self.ball_active.to_string())
            .set("status", self.status);
        r
    }
}

fn linf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn history_csv<P: ControlProblem + ?Sized>(res: &OptimizationResult<P>) -> String {
    let mut s = String::from("iter,J,residual\n");
    for (i, (j, r)) in res.j_history.iter().zip(&res.residual_history).enumerate() {
        let _ = writeln!(s, "{i},{},{}", format_sci(*j), format_sci(*r));
    }
    s
}

fn status_code(status: Status) -> ExitCode {
    match status {
        Status::Converged => ExitCode::Success,
        Status::MaxIter | Status::Diverged => ExitCode::Divergence,
    }
}

fn problem_command<P>(
    problem: &P,
    u: &P::Control,
    u0: &P::Control,
    cfg: &ExperimentConfig,
    command: Command,
    threads: Option<usize>,
    out: &mut Artifacts,
) -> Result<ExitCode>
where
    P: ControlProblem,
    P::Control: CsvField,
    P::State: CsvField,
{
    let solve = &cfg.solver;
    let opts = cfg.optimize_options();
    match command {
        Command::State | Command::Adjoint => {
            let y = problem.state(u, solve).map_err(|e| Failure::from_core("state solve", e))?;
            out.field("u.csv", u)?;
            out.field("y.csv", &y)?;
            if command == Command::Adjoint {
                let phi = problem.adjoint(&y, solve).map_err(|e| Failure::from_core("adjoint solve", e))?;
                out.field("phi.csv", &phi)?;
            }
            let rep = optimize::optimality_of(problem, u, solve).map_err(|e| Failure::from_core("gradient", e))?;
            let report = Summary::from_optimality(&rep, "solved").report();
            out.report("report.txt", &report)?;
            Ok(ExitCode::Success)
        }
        Command::Optimize => {
            let res = optimize::solve_unconstrained(problem, u0, &opts).map_err(|e| Failure::from_core("optimize", e))?;
            out.field("u.csv", &res.u)?;
            out.field("y.csv", &res.y)?;
            out.field("phi.csv", &res.phi)?;
            out.write("history.csv", &history_csv(&res))?;
            let mut report = Summary::from_result(&res).report();
            if let Some(d) = &res.detail {
                report.set("detail", d.as_str());
            }
            out.report("report.txt", &report)?;
            Ok(status_code(res.status))
        }
        Command::Homotopy => {
            let execution = match cfg.optimize.execution {
                ExecutionMode::Sequential => Execution::Sequential,
                ExecutionMode::Parallel => Execution::Parallel(threads.unwrap_or(0)),
            };
            let h = optimize::homotopy(problem, u0, &opts, execution).map_err(|e| Failure::from_core("homotopy", e))?;
            out.field("u.csv", &h.unconstrained.u)?;
            out.field("y.csv", &h.unconstrained.y)?;
            out.field("phi.csv", &h.unconstrained.phi)?;
            let mut table = String::from("stage,M,distance,iters,status,M_active,ball_active\n");
            for (i, s) in h.stages.iter().enumerate() {
                out.field(&format!("u_M{i:02}.csv"), &s.result.u)?;
                let r = &s.result;
                let _ = writeln!(
                    table,
                    "{i},{},{},{},{},{},{}",
                    format_sci(s.m),
                    format_sci(s.distance),
                    r.iterations,
                    r.status.as_str(),
                    r.m_active,
                    r.ball_active
                );
            }
            out.write("homotopy.csv", &table)?;
            let mut report = Summary::from_result(&h.unconstrained).report();
            let last = h.stages.last().expect("validated schedule is nonempty");
            report
                .set("M_active", last.result.m_active.to_string())
                .set("ball_active", h.stages.iter().any(|s| s.result.ball_active).to_string())
                .set_f64("rho", h.rho)
                .set("stages", h.stages.len().to_string())
                .set_f64("distance_last", last.distance);
            out.report("report.txt", &report)?;
            Ok(h.stages.iter().map(|s| status_code(s.result.status)).fold(status_code(h.unconstrained.status), worse))
        }
        Command::Verify => verify(problem, cfg, out),
        Command::Exponents | Command::Counterexample => unreachable!("dispatched before building a problem"),
    }
}

fn worse(a: ExitCode, b: ExitCode) -> ExitCode {
    if b.code() > a.code() {
        b
    } else {
        a
    }
}

/// Reads a control written by `optimize`, rebuilds it on the configured grid
/// and recomputes state, adjoint and gradient from scratch.
fn verify<P>(problem: &P, cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<ExitCode>
where
    P: ControlProblem,
    P::Control: CsvField,
{
    let path = cfg.run.artifact.clone().unwrap_or_else(|| cfg.run.output_dir.join("u.csv"));
    let key = "[run] artifact";
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Failure::config(format!("{key}: cannot read '{}': {e}", path.display())))?;
    let table = parse_field_csv(&text).map_err(|e| Failure::from_core(key, e))?;
    let expected = parse_field_csv(&field_to_csv(&problem.zero_control())).expect("own output parses");
    if table.dim != expected.dim || table.rows.len() != expected.rows.len() {
        return Err(Failure::config(format!(
            "{key}: '{}' has {} rows in {} dimensions; the configured control has {} rows in {}",
            path.display(),
            table.rows.len(),
            table.dim,
            expected.rows.len(),
            expected.dim
        )));
    }
    if let Some(i) = table.rows.iter().zip(&expected.rows).position(|(a, b)| a.t != b.t || a.x != b.x) {
        return Err(Failure::config(format!(
            "{key}: node of data row {} in '{}' does not match the configured grid",
            i + 1,
            path.display()
        )));
    }
    let u = problem
        .make_control(table.rows.iter().map(|r| r.value).collect())
        .map_err(|e| Failure::from_core(key, e))?;
    let rep = optimize::optimality_of(problem, &u, &cfg.solver).map_err(|e| Failure::from_core("verify", e))?;
    let grad_tol = cfg.optimize.grad_tol;
    let mut ok = rep.grad_norm <= grad_tol;
    let mut report = Summary::from_optimality(&rep, "").report();
    report.set_f64("grad_tol", grad_tol).set_f64("consistency", rep.consistency);
    let recorded = path.with_file_name("report.txt");
    if let Ok(text) = std::fs::read_to_string(&recorded) {
        if let Ok(j) = Report::parse(&text).and_then(|r| r.get_f64("J")) {
            report.set_f64("J_recorded", j);
            ok &= (j - rep.objective).abs() <= VERIFY_J_RTOL * (1.0 + rep.objective.abs());
        }
    }
    report.set("status", if ok { "verified" } else { "failed" });
    out.report("verify.txt", &report)?;
    Ok(if ok { ExitCode::Success } else { ExitCode::Validation })
}

fn exponent_checks(report: &mut Report, rep: &ExponentReport) {
    for (i, f) in rep.flags.iter().enumerate() {
        let verdict = if f.passed { "pass" } else { "fail" };
        report.set(&format!("check{i}"), format!("{verdict}: {} ({})", f.name, f.detail));
    }
    report.set("status", if rep.is_valid() { "valid" } else { "invalid" });
}

fn exponents(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<ExitCode> {
    let e = &cfg.exponents;
    let n = match (e.n, cfg.grid.as_ref()) {
        (Some(n), _) => n,
        (None, Some(g)) => g.n as u32,
        (None, None) => return Err(Failure::config("[exponents] n: missing (and no [grid] n to fall back on)")),
    };
    let r_text = e.r.as_deref().ok_or_else(|| Failure::config("[exponents] r: missing required key"))?;
    let r = parse_rational(r_text).map_err(|err| Failure::from_core("[exponents] r", err))?;
    let mut report = Report::new();
    report.set("n", n.to_string()).set("r", r_text);
    let rep = match e.kind {
        ProblemKind::Parabolic => {
            report.set("kind", "parabolic");
            let rep = parabolic_exponent(&r, n).map_err(|err| Failure::from_core("[exponents] n", err))?;
            if let Some(q) = &rep.q {
                report.set("q", q.to_string());
            }
            report.set("arbitrary_finite", rep.arbitrary_finite.to_string());
            if n >= 3 {
                let (steps, _) = bootstrap_steps(n).map_err(|err| Failure::from_core("[exponents] n", err))?;
                report.set("bootstrap_steps", steps.to_string());
            }
            rep
        }
        ProblemKind::Elliptic => {
            report.set("kind", "elliptic");
            let rep = elliptic_exponents(&r, n).map_err(|err| Failure::from_core("[exponents] n", err))?;
            if let Some(s) = &rep.s {
                report.set("s", semicontrol::analysis::Exponent::Finite(s.clone()).to_string());
            }
            for (key, v) in [("p", &rep.p), ("q", &rep.q), ("q_tilde", &rep.q_tilde)] {
                if let Some(v) = v {
                    report.set(key, v.to_string());
                }
            }
            rep
        }
    };
    exponent_checks(&mut report, &rep);
    out.report("report.txt", &report)?;
    Ok(if rep.is_valid() { ExitCode::Success } else { ExitCode::Validation })
}

/// Tolerance of the unboundedness witness `min y >= H_m`.
const WITNESS_TOL: f64 = 1e-12;

fn counterexample(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<ExitCode> {
    let c = &cfg.counterexample;
    let stage = |e| Failure::from_core("[counterexample]", e);
    let norms = control_norm_sq_series(c.k, c.n, c.with_cubic).map_err(stage)?;
    let mut table = String::from("K,H_K,y_min,dt_series,dxx_series,u_norm\n");
    let mut witness = true;
    let mut last_min = f64::NAN;
    for k in 1..=c.k {
        let h = harmonic(k);
        let y_min = min_on_cylinder(k, c.n, c.samples).map_err(stage)?;
        witness &= y_min >= h - WITNESS_TOL;
        last_min = y_min;
        let dt = counterexample_norm_series(k, c.n, SeriesKind::Dt).map_err(stage)?;
        let dxx = counterexample_norm_series(k, c.n, SeriesKind::Dxx).map_err(stage)?;
        let _ = writeln!(
            table,
            "{k},{},{},{},{},{}",
            format_sci(h),
            format_sci(y_min),
            format_sci(dt),
            format_sci(dxx),
            format_sci(norms[k - 1].sqrt())
        );
    }
    out.write("counterexample.csv", &table)?;
    let mut report = Report::new();
    report
        .set("n", c.n.to_string())
        .set("K", c.k.to_string())
        .set("with_cubic", c.with_cubic.to_string())
        .set_f64("H_K", harmonic(c.k))
        .set_f64("y_min", last_min)
        .set_f64("u_norm", norms[c.k - 1].sqrt())
        .set("witness", witness.to_string())
        .set("status", if witness { "ok" } else { "failed" });
    out.report("report.txt", &report)?;
    Ok(if witness { ExitCode::Success } else { ExitCode::Validation })
}

//! Tracking-type optimal control: objective, adjoint gradient, descent for the
//! unconstrained problem, projected gradient for the box-truncated proximal
//! problems and the truncation homotopy between the two.
//!
//! Both problem families implement [`ControlProblem`]; every algorithm below is
//! written once against that trait. Control-space inner products use the
//! quadrature weights of the control field, so the gradient of the discrete
//! objective is literally `phi + alpha u` (parabolic) or `phi|_Gamma + alpha u`
//! (elliptic).

use rayon::prelude::*;

use crate::elliptic::{self, EllipticProblem};
use crate::error::{argument, Error, Result};
use crate::field::{BoundaryField, Field, SpaceTimeField, SpatialField};
use crate::parabolic::{self, AdjointSource, ParabolicProblem};
use crate::quadrature::Weighted;
use crate::SolveOptions;

/// A discretized control problem `min 1/2 ||y_u - y_d||^2 + alpha/2 ||u||^2`.
pub trait ControlProblem: Sync {
    type Control: Weighted + Clone + Send + Sync + std::fmt::Debug;
    type State: Field + Clone + Send + Sync + std::fmt::Debug;

    fn alpha(&self) -> f64;
    fn zero_control(&self) -> Self::Control;
    fn zero_state(&self) -> Self::State;
    /// Control-space quadrature weights.
    fn control_weights(&self) -> Vec<f64>;
    fn make_control(&self, values: Vec<f64>) -> Result<Self::Control>;
    fn state(&self, u: &Self::Control, opts: &SolveOptions) -> Result<Self::State>;
    /// `1/2 ||y - y_d||^2` in the state norm.
    fn tracking(&self, y: &Self::State) -> f64;
    /// Tracking adjoint at the state `y`.
    fn adjoint(&self, y: &Self::State, opts: &SolveOptions) -> Result<Self::State>;
    /// The adjoint as a control-space field (identity or boundary trace).
    fn adjoint_on_controls(&self, phi: &Self::State) -> Self::Control;
}

impl ControlProblem for ParabolicProblem {
    type Control = SpaceTimeField;
    type State = SpaceTimeField;

    fn alpha(&self) -> f64 {
        ParabolicProblem::alpha(self)
    }

    fn zero_control(&self) -> SpaceTimeField {
        SpaceTimeField::zeros(*self.grid())
    }

    fn zero_state(&self) -> SpaceTimeField {
        SpaceTimeField::zeros(*self.grid())
    }

    fn control_weights(&self) -> Vec<f64> {
        crate::quadrature::space_time_weights(self.grid())
    }

    fn make_control(&self, values: Vec<f64>) -> Result<SpaceTimeField> {
        SpaceTimeField::new(*self.grid(), values)
    }

    fn state(&self, u: &SpaceTimeField, opts: &SolveOptions) -> Result<SpaceTimeField> {
        parabolic::solve_state(self, u, opts)
    }

    fn tracking(&self, y: &SpaceTimeField) -> f64 {
        let w = self.control_weights();
        0.5 * y.values().iter().zip(self.target().values()).zip(&w).map(|((a, b), w)| w * (a - b) * (a - b)).sum::<f64>()
    }

    fn adjoint(&self, y: &SpaceTimeField, opts: &SolveOptions) -> Result<SpaceTimeField> {
        parabolic::solve_adjoint(self, y, AdjointSource::Tracking, opts)
    }

    fn adjoint_on_controls(&self, phi: &SpaceTimeField) -> SpaceTimeField {
        phi.clone()
    }
}

impl ControlProblem for EllipticProblem {
    type Control = BoundaryField;
    type State = SpatialField;

    fn alpha(&self) -> f64 {
        EllipticProblem::alpha(self)
    }

    fn zero_control(&self) -> BoundaryField {
        BoundaryField::zeros(*self.grid())
    }

    fn zero_state(&self) -> SpatialField {
        SpatialField::zeros(*self.grid())
    }

    fn control_weights(&self) -> Vec<f64> {
        self.grid().boundary_weights()
    }

    fn make_control(&self, values: Vec<f64>) -> Result<BoundaryField> {
        BoundaryField::new(*self.grid(), values)
    }

    fn state(&self, u: &BoundaryField, opts: &SolveOptions) -> Result<SpatialField> {
        elliptic::solve_state_elliptic(self, u, opts)
    }

    fn tracking(&self, y: &SpatialField) -> f64 {
        let w = self.grid().trapezoid_weights();
        0.5 * y.values().iter().zip(self.target().values()).zip(&w).map(|((a, b), w)| w * (a - b) * (a - b)).sum::<f64>()
    }

    fn adjoint(&self, y: &SpatialField, opts: &SolveOptions) -> Result<SpatialField> {
        elliptic::solve_adjoint_elliptic(self, y, opts)
    }

    fn adjoint_on_controls(&self, phi: &SpatialField) -> BoundaryField {
        elliptic::trace(phi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Armijo {
    pub c1: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
}

impl Default for Armijo {
    fn default() -> Self {
        Self { c1: 1e-4, backtrack: 0.5, max_backtracks: 40 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeOptions {
    /// Stop when the weighted `L^2` norm of the (projected) gradient residual falls below this.
    pub grad_tol: f64,
    pub max_iter: usize,
    pub armijo: Armijo,
    /// Box levels `M` for the homotopy, strictly increasing.
    pub m_schedule: Vec<f64>,
    /// Radius of the monitored ball around the reference; `None` means `10 (1 + ||u_ref||)`.
    pub rho: Option<f64>,
    /// Scales the very first trial step `1 / (1 + alpha)`.
    pub fixed_point_damping: f64,
    pub solve: SolveOptions,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-8,
            max_iter: 500,
            armijo: Armijo::default(),
            m_schedule: (0..=10).map(|k| f64::from(1u32 << k)).collect(),
            rho: None,
            fixed_point_damping: 1.0,
            solve: SolveOptions::default(),
        }
    }
}

impl OptimizeOptions {
    pub fn validate(&self) -> Result<()> {
        self.solve.validate()?;
        if !(self.grad_tol > 0.0) || self.max_iter == 0 {
            return Err(argument("grad_tol and max_iter must be positive"));
        }
        let a = &self.armijo;
        if !(a.c1 > 0.0 && a.c1 < 1.0 && a.backtrack > 0.0 && a.backtrack < 1.0) {
            return Err(argument("Armijo parameters need 0 < c1 < 1 and 0 < backtrack < 1"));
        }
        if let Some(i) = self.m_schedule.iter().position(|m| !(*m > 0.0)) {
            return Err(argument(format!("M_schedule entry {i} must be positive")));
        }
        if self.m_schedule.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(argument("M_schedule must be strictly increasing"));
        }
        if let Some(rho) = self.rho {
            if !(rho > 0.0) {
                return Err(argument(format!("rho = {rho} must be positive")));
            }
        }
        if !(self.fixed_point_damping > 0.0 && self.fixed_point_damping <= 1.0) {
            return Err(argument("fixed_point_damping must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIter,
    Diverged,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIter => "max_iter",
            Status::Diverged => "diverged",
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizationResult<P: ControlProblem + ?Sized> {
    pub u: P::Control,
    pub y: P::State,
    pub phi: P::State,
    pub objective: f64,
    pub j_history: Vec<f64>,
    pub residual_history: Vec<f64>,
    pub iterations: usize,
    pub status: Status,
    pub m_active: bool,
    pub ball_active: bool,
    /// Human-readable note on abnormal termination or flagged constraints.
    pub detail: Option<String>,
}

impl<P: ControlProblem + ?Sized> OptimizationResult<P> {
    pub fn residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(f64::NAN)
    }
}

fn weighted_norm(v: &[f64], w: &[f64]) -> f64 {
    v.iter().zip(w).map(|(a, w)| w * a * a).sum::<f64>().sqrt()
}

fn weighted_dot(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    a.iter().zip(b).zip(w).map(|((x, y), w)| w * x * y).sum()
}

fn control_norm_sq<P: ControlProblem + ?Sized>(problem: &P, u: &P::Control) -> f64 {
    let w = problem.control_weights();
    u.values().iter().zip(&w).map(|(a, w)| w * a * a).sum()
}

/// `J(u) = 1/2 ||y_u - y_d||^2 + alpha/2 ||u||^2`.
pub fn objective<P: ControlProblem + ?Sized>(problem: &P, u: &P::Control, opts: &SolveOptions) -> Result<f64> {
    let y = problem.state(u, opts)?;
    Ok(problem.tracking(&y) + 0.5 * problem.alpha() * control_norm_sq(problem, u))
}

/// Gradient of `J` in the control inner product: the control-space adjoint plus `alpha u`.
pub fn gradient<P: ControlProblem + ?Sized>(problem: &P, u: &P::Control, opts: &SolveOptions) -> Result<P::Control> {
    let y = problem.state(u, opts)?;
    let phi = problem.adjoint(&y, opts)?;
    let mut g = problem.adjoint_on_controls(&phi);
    let alpha = problem.alpha();
    for (gi, ui) in g.values_mut().iter_mut().zip(u.values()) {
        *gi += alpha * ui;
    }
    Ok(g)
}

/// Box projection `P_M` applied entrywise; `M = inf` is the identity.
pub fn project_box(values: &[f64], m: f64) -> Vec<f64> {
    values.iter().map(|v| v.clamp(-m, m)).collect()
}

/// `|| u - P_M((u_ref - phi) / (1 + alpha)) ||` in the control norm, with `phi`
/// given on the control space. Zero exactly when the discrete variational
/// inequality of the proximal box problem holds.
pub fn vi_residual<C: Weighted>(u: &C, phi: &C, u_ref: &C, m: f64, alpha: f64) -> Result<f64> {
    if u.grid() != phi.grid() || u.grid() != u_ref.grid() {
        return Err(argument("vi_residual arguments live on different grids"));
    }
    if !(m > 0.0) || !(alpha > 0.0) {
        return Err(argument("vi_residual needs M > 0 and alpha > 0"));
    }
    let w = u.weights();
    let diff: Vec<f64> = u
        .values()
        .iter()
        .zip(phi.values())
        .zip(u_ref.values())
        .map(|((u, p), r)| u - ((r - p) / (1.0 + alpha)).clamp(-m, m))
        .collect();
    Ok(weighted_norm(&diff, &w))
}

struct Point<P: ControlProblem + ?Sized> {
    u: Vec<f64>,
    y: P::State,
    j: f64,
}

/// Evaluation of the (possibly proximal) objective used by the drivers.
struct Objective<'a, P: ControlProblem + ?Sized> {
    problem: &'a P,
    weights: Vec<f64>,
    /// Proximal reference for the truncated problems.
    reference: Option<&'a [f64]>,
    opts: &'a SolveOptions,
}

impl<P: ControlProblem + ?Sized> Objective<'_, P> {
    fn eval(&self, u: Vec<f64>) -> Result<Point<P>> {
        let control = self.problem.make_control(u.clone())?;
        let y = self.problem.state(&control, self.opts)?;
        let alpha = self.problem.alpha();
        let mut j = self.problem.tracking(&y) + 0.5 * alpha * weighted_dot(&u, &u, &self.weights);
        if let Some(r) = self.reference {
            let d: Vec<f64> = u.iter().zip(r).map(|(a, b)| a - b).collect();
            j += 0.5 * weighted_dot(&d, &d, &self.weights);
        }
        Ok(Point { u, y, j })
    }

    /// Adjoint on controls and gradient of the evaluated objective.
    fn gradient(&self, p: &Point<P>) -> Result<(P::State, Vec<f64>)> {
        let phi = self.problem.adjoint(&p.y, self.opts)?;
        let pc = self.problem.adjoint_on_controls(&phi);
        let alpha = self.problem.alpha();
        let mut g: Vec<f64> = pc.values().iter().zip(&p.u).map(|(f, u)| f + alpha * u).collect();
        if let Some(r) = self.reference {
            for ((gi, u), r) in g.iter_mut().zip(&p.u).zip(r) {
                *gi += u - r;
            }
        }
        // Entries without quadrature weight (the initial time level) carry no control.
        for (gi, w) in g.iter_mut().zip(&self.weights) {
            if *w == 0.0 {
                *gi = 0.0;
            }
        }
        Ok((phi, g))
    }
}

fn is_divergence(e: &Error) -> bool {
    matches!(e, Error::Divergence { .. } | Error::LinearSolve(_))
}

/// Projected descent shared by both drivers; `m = inf` gives plain gradient descent.
fn descend<P: ControlProblem + ?Sized>(
    problem: &P,
    start: Vec<f64>,
    reference: Option<&[f64]>,
    m: f64,
    rho: Option<f64>,
    opts: &OptimizeOptions,
) -> Result<OptimizationResult<P>> {
    opts.validate()?;
    let weights = problem.control_weights();
    if start.len() != weights.len() {
        return Err(Error::Shape { expected: weights.len(), found: start.len() });
    }
    let obj = Objective { problem, weights: weights.clone(), reference, opts: &opts.solve };
    let alpha = problem.alpha();
    let mut start = project_box(&start, m);
    for (s, w) in start.iter_mut().zip(&weights) {
        if *w == 0.0 {
            *s = 0.0;
        }
    }

    let mut point = match obj.eval(start.clone()) {
        Ok(p) => p,
        Err(e) if is_divergence(&e) => {
            let u = problem.make_control(start)?;
            let zero = problem.zero_state();
            return Ok(OptimizationResult {
                u,
                phi: zero.clone(),
                y: zero,
                objective: f64::NAN,
                j_history: vec![],
                residual_history: vec![],
                iterations: 0,
                status: Status::Diverged,
                m_active: false,
                ball_active: false,
                detail: Some(e.to_string()),
            });
        }
        Err(e) => return Err(e),
    };
    let (mut phi, mut g) = obj.gradient(&point)?;

    // Stationarity measure: the gradient itself, or the fixed-point residual of the projection.
    let stationarity = |u: &[f64], phi: &P::State| -> f64 {
        let pc = problem.adjoint_on_controls(phi);
        match reference {
            None => {
                let g: Vec<f64> = pc.values().iter().zip(u).map(|(f, u)| f + alpha * u).collect();
                weighted_norm(&g, &weights)
            }
            Some(r) => {
                let d: Vec<f64> = u
                    .iter()
                    .zip(pc.values())
                    .zip(r)
                    .map(|((u, p), r)| u - ((r - p) / (1.0 + alpha)).clamp(-m, m))
                    .collect();
                weighted_norm(&d, &weights)
            }
        }
    };

    let mut j_history = vec![point.j];
    let mut residual_history = vec![stationarity(&point.u, &phi)];
    let mut status = Status::MaxIter;
    let mut detail = None;
    let mut iterations = 0;
    let mut step = opts.fixed_point_damping / (1.0 + alpha);
    let mut previous: Option<(Vec<f64>, Vec<f64>)> = None;

    loop {
        if *residual_history.last().unwrap() <= opts.grad_tol {
            status = Status::Converged;
            break;
        }
        if iterations >= opts.max_iter {
            detail = Some(format!("no convergence within {} iterations", opts.max_iter));
            break;
        }
        if let Some((du, dg)) = &previous {
            let sy = weighted_dot(du, dg, &weights);
            let ss = weighted_dot(du, du, &weights);
            if sy > 0.0 && ss > 0.0 {
                step = ss / sy;
            }
        }

        let slack = 10.0 * f64::EPSILON * point.j.abs();
        let mut s = step;
        let mut accepted = None;
        let mut last_error = None;
        for _ in 0..=opts.armijo.max_backtracks {
            let trial_u = project_box(&point.u.iter().zip(&g).map(|(u, g)| u - s * g).collect::<Vec<_>>(), m);
            let d: Vec<f64> = trial_u.iter().zip(&point.u).map(|(a, b)| a - b).collect();
            let decrease = weighted_dot(&g, &d, &weights);
            if decrease >= 0.0 {
                // No descent left along the projected arc; only roundoff separates us from stationarity.
                last_error = Some("projected step is not a descent direction".to_string());
                break;
            }
            match obj.eval(trial_u) {
                Ok(trial) if trial.j.is_finite() && trial.j <= point.j + opts.armijo.c1 * decrease + slack => {
                    accepted = Some(trial);
                    break;
                }
                Ok(_) => {}
                Err(e) if is_divergence(&e) => last_error = Some(e.to_string()),
                Err(e) => return Err(e),
            }
            s *= opts.armijo.backtrack;
        }
        let Some(trial) = accepted else {
            detail = Some(format!(
                "line search failed at iteration {iterations}{}",
                last_error.map(|e| format!(": {e}")).unwrap_or_default()
            ));
            break;
        };
        let (trial_phi, trial_g) = obj.gradient(&trial)?;
        let du: Vec<f64> = trial.u.iter().zip(&point.u).map(|(a, b)| a - b).collect();
        let dg: Vec<f64> = trial_g.iter().zip(&g).map(|(a, b)| a - b).collect();
        previous = Some((du, dg));
        point = trial;
        phi = trial_phi;
        g = trial_g;
        iterations += 1;
        j_history.push(point.j);
        residual_history.push(stationarity(&point.u, &phi));
    }

    let m_active = m.is_finite()
        && point.u.iter().zip(&weights).any(|(u, w)| *w > 0.0 && u.abs() >= m * (1.0 - 1e-12));
    let mut ball_active = false;
    if let (Some(r), Some(rho)) = (reference, rho) {
        let d: Vec<f64> = point.u.iter().zip(r).map(|(a, b)| a - b).collect();
        let dist = weighted_norm(&d, &weights);
        if dist >= rho * (1.0 - 1e-8) {
            ball_active = true;
            let note = format!("ball constraint ||u - u_ref|| <= {rho} reached or violated (distance {dist:e})");
            detail = Some(match detail {
                Some(d) => format!("{d}; {note}"),
                None => note,
            });
        }
    }
    let objective = point.j;
    Ok(OptimizationResult {
        u: problem.make_control(point.u)?,
        y: point.y,
        phi,
        objective,
        j_history,
        residual_history,
        iterations,
        status,
        m_active,
        ball_active,
        detail,
    })
}

/// Gradient descent with Barzilai-Borwein initial steps and Armijo backtracking.
pub fn solve_unconstrained<P: ControlProblem + ?Sized>(
    problem: &P,
    u0: &P::Control,
    opts: &OptimizeOptions,
) -> Result<OptimizationResult<P>> {
    descend(problem, u0.values().to_vec(), None, f64::INFINITY, None, opts)
}

/// Projected gradient for `min J(u) + 1/2 ||u - u_ref||^2` over `|u| <= M`,
/// started from `P_M(u_ref)`. The ball `||u - u_ref|| <= rho` is only monitored.
pub fn solve_truncated<P: ControlProblem + ?Sized>(
    problem: &P,
    u_ref: &P::Control,
    m: f64,
    rho: f64,
    opts: &OptimizeOptions,
) -> Result<OptimizationResult<P>> {
    if !(m > 0.0) {
        return Err(argument(format!("box level M = {m} must be positive")));
    }
    if !(rho > 0.0) {
        return Err(argument(format!("ball radius rho = {rho} must be positive")));
    }
    let r = u_ref.values();
    descend(problem, r.to_vec(), Some(r), m, Some(rho), opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Run schedule entries concurrently on a pool of the given size (`0`: rayon default).
    Parallel(usize),
}

#[derive(Debug, Clone)]
pub struct HomotopyStage<P: ControlProblem + ?Sized> {
    pub m: f64,
    pub result: OptimizationResult<P>,
    /// `||u_M - u_bar||` in the control norm.
    pub distance: f64,
}

#[derive(Debug, Clone)]
pub struct Homotopy<P: ControlProblem + ?Sized> {
    pub unconstrained: OptimizationResult<P>,
    pub rho: f64,
    pub stages: Vec<HomotopyStage<P>>,
}

/// Computes `u_bar` from `u0`, then solves the truncated problem for every `M`
/// in the schedule with `u_bar` as proximal reference.
pub fn homotopy<P: ControlProblem + ?Sized>(
    problem: &P,
    u0: &P::Control,
    opts: &OptimizeOptions,
    execution: Execution,
) -> Result<Homotopy<P>> {
    opts.validate()?;
    if opts.m_schedule.is_empty() {
        return Err(argument("M_schedule must not be empty"));
    }
    let unconstrained = solve_unconstrained(problem, u0, opts)?;
    if unconstrained.status == Status::Diverged {
        return Err(Error::Divergence { stage: "homotopy reference solve", step: 0, residual: f64::NAN });
    }
    let weights = problem.control_weights();
    let ubar = unconstrained.u.clone();
    let rho = opts.rho.unwrap_or_else(|| 10.0 * (1.0 + weighted_norm(ubar.values(), &weights)));
    let stage = |m: f64| -> Result<HomotopyStage<P>> {
        let result = solve_truncated(problem, &ubar, m, rho, opts)?;
        let d: Vec<f64> = result.u.values().iter().zip(ubar.values()).map(|(a, b)| a - b).collect();
        Ok(HomotopyStage { m, distance: weighted_norm(&d, &weights), result })
    };
    let stages: Result<Vec<_>> = match execution {
        Execution::Sequential => opts.m_schedule.iter().map(|&m| stage(m)).collect(),
        Execution::Parallel(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| argument(format!("thread pool: {e}")))?;
            pool.install(|| opts.m_schedule.par_iter().map(|&m| stage(m)).collect())
        }
    };
    Ok(Homotopy { unconstrained, rho, stages: stages? })
}

/// Optimality quantities recomputed from scratch for a converged control.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalityReport {
    pub objective: f64,
    /// `||phi + alpha u||` in the control norm.
    pub grad_norm: f64,
    pub u_linf: f64,
    pub y_linf: f64,
    pub phi_linf: f64,
    /// `max |u + phi / alpha|` over control nodes.
    pub consistency: f64,
}

pub fn optimality_report<P: ControlProblem + ?Sized>(
    problem: &P,
    result: &OptimizationResult<P>,
    opts: &SolveOptions,
) -> Result<OptimalityReport> {
    if result.status != Status::Converged {
        return Err(argument(format!("optimality report needs a converged result, status is {}", result.status.as_str())));
    }
    optimality_of(problem, &result.u, opts)
}

/// [`optimality_report`] for an arbitrary control, without a status check.
pub fn optimality_of<P: ControlProblem + ?Sized>(problem: &P, u: &P::Control, opts: &SolveOptions) -> Result<OptimalityReport> {
    let y = problem.state(u, opts)?;
    let phi = problem.adjoint(&y, opts)?;
    let pc = problem.adjoint_on_controls(&phi);
    let alpha = problem.alpha();
    let weights = problem.control_weights();
    let g: Vec<f64> = pc.values().iter().zip(u.values()).map(|(p, u)| p + alpha * u).collect();
    let consistency = pc
        .values()
        .iter()
        .zip(u.values())
        .zip(&weights)
        .filter(|(_, w)| **w > 0.0)
        .fold(0.0f64, |m, ((p, u), _)| m.max((u + p / alpha).abs()));
    let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(OptimalityReport {
        objective: problem.tracking(&y) + 0.5 * alpha * weighted_dot(u.values(), u.values(), &weights),
        grad_norm: weighted_norm(&g, &weights),
        u_linf: max_abs(u.values()),
        y_linf: max_abs(y.values()),
        phi_linf: max_abs(phi.values()),
        consistency,
    })
}

//! Semilinear parabolic state equation with homogeneous Dirichlet data,
//!
//! ```text
//! y_t + A y + f(y) = u in Q,   y = 0 on the lateral boundary,   y(0) = y0,
//! ```
//!
//! discretized by implicit Euler in time. The control acts on time levels
//! `1..=nt`; level 0 of a control field is ignored. The adjoint is the exact
//! transpose of the linearized time stepping, run backward from `phi(T) = 0`.

use crate::coefficients::EllipticCoefficients;
use crate::error::{argument, validation, Error, Result};
use crate::field::{Field, SpaceTimeField, SpatialField};
use crate::grid::GridSpec;
use crate::newton::{solve_transpose_refined, DiagonalSystem};
use crate::nonlinearity::Nonlinearity;
use crate::operator::{assemble_operator, BoundaryCondition, DiscreteOperator};
use crate::quadrature::{bochner_norm, h1_seminorm_sq, lp_norm, weighted_lp};
use crate::sparse::{BandedLu, CsrMatrix};
use crate::SolveOptions;

#[derive(Debug, Clone)]
pub struct ParabolicProblem {
    grid: GridSpec,
    coeffs: EllipticCoefficients,
    f: Nonlinearity,
    y0: SpatialField,
    yd: SpaceTimeField,
    alpha: f64,
    op: DiscreteOperator,
    /// `I + tau A_h` on interior nodes.
    step: CsrMatrix,
    step_t: CsrMatrix,
}

/// Right-hand side of the backward adjoint equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdjointSource {
    /// `y - y_d`.
    Tracking,
    /// `y`.
    StateOnly,
    /// `y_d`.
    TargetOnly,
}

impl ParabolicProblem {
    pub fn new(
        grid: GridSpec,
        coeffs: EllipticCoefficients,
        f: Nonlinearity,
        y0: SpatialField,
        yd: SpaceTimeField,
        alpha: f64,
    ) -> Result<Self> {
        if grid.time().is_none() {
            return Err(argument("parabolic problem needs a grid with a time axis"));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(argument(format!("alpha = {alpha} must be positive")));
        }
        let spatial = grid.spatial_only();
        if coeffs.grid() != &spatial || y0.grid() != &spatial {
            return Err(argument("coefficients and y0 must live on the spatial grid of the problem"));
        }
        if yd.grid() != &grid {
            return Err(argument("target y_d must live on the space-time grid of the problem"));
        }
        if f.value(0.0) != 0.0 {
            return Err(validation(format!("f(0) = 0 violated: f(0) = {}", f.value(0.0))));
        }
        let op = assemble_operator(&coeffs, BoundaryCondition::Dirichlet);
        let tau = grid.tau();
        let n = op.active_nodes().len();
        let step = CsrMatrix::identity(n).combine(1.0, op.matrix(), tau);
        let step_t = step.transpose();
        Ok(Self { grid, coeffs, f, y0, yd, alpha, op, step, step_t })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn coefficients(&self) -> &EllipticCoefficients {
        &self.coeffs
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.f
    }

    pub fn y0(&self) -> &SpatialField {
        &self.y0
    }

    pub fn target(&self) -> &SpaceTimeField {
        &self.yd
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn operator(&self) -> &DiscreteOperator {
        &self.op
    }

    pub fn with_target(&self, yd: SpaceTimeField) -> Result<Self> {
        Self::new(self.grid, self.coeffs.clone(), self.f, self.y0.clone(), yd, self.alpha)
    }

    pub fn with_y0(&self, y0: SpatialField) -> Result<Self> {
        Self::new(self.grid, self.coeffs.clone(), self.f, y0, self.yd.clone(), self.alpha)
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(self.grid, self.coeffs.clone(), self.f, self.y0.clone(), self.yd.clone(), alpha)
    }

    fn check_control(&self, u: &SpaceTimeField) -> Result<()> {
        if u.grid() != &self.grid {
            return Err(argument("control lives on a different space-time grid"));
        }
        if !u.is_finite() {
            return Err(validation("control has non-finite values"));
        }
        Ok(())
    }

    fn forward(&self, u: &SpaceTimeField, opts: &SolveOptions, truncation: Option<f64>) -> Result<SpaceTimeField> {
        opts.validate()?;
        self.check_control(u)?;
        let tau = self.grid.tau();
        let nodes = self.grid.node_count();
        let ones = vec![1.0; self.op.active_nodes().len()];
        let mut out = vec![0.0; (self.grid.steps() + 1) * nodes];
        out[..nodes].copy_from_slice(self.y0.values());
        let mut prev = self.op.gather(self.y0.values());
        let f = &self.f;
        let stage = if truncation.is_some() { "truncated state solve" } else { "state solve" };
        for m in 1..=self.grid.steps() {
            let um = self.op.gather(u.level(m));
            let rhs: Vec<f64> = prev.iter().zip(&um).map(|(y, u)| y + tau * u).collect();
            let next = match truncation {
                None => DiagonalSystem {
                    matrix: &self.step,
                    rhs: &rhs,
                    value: |_, z: f64| tau * f.value(z),
                    derivative: |_, z: f64| tau * f.derivative(z),
                    residual_scale: &ones,
                }
                .solve(prev.clone(), opts, stage, m)?,
                Some(k) => DiagonalSystem {
                    matrix: &self.step,
                    rhs: &rhs,
                    value: |_, z: f64| tau * f.truncated_value(z, k),
                    derivative: |_, z: f64| tau * f.truncated_derivative(z, k),
                    residual_scale: &ones,
                }
                .solve(prev.clone(), opts, stage, m)?,
            };
            self.op.scatter(&next, &mut out[m * nodes..(m + 1) * nodes]);
            prev = next;
        }
        Ok(SpaceTimeField::from_raw(self.grid, out))
    }

    /// Backward sweep `G_m^T phi^m = phi^{m+1} + tau s^m` with
    /// `G_m = I + tau A_h + tau f'(y^m)`; `phi^0` is left at zero.
    fn backward(&self, y: &SpaceTimeField, source: &SpaceTimeField, opts: &SolveOptions) -> Result<SpaceTimeField> {
        let tau = self.grid.tau();
        let nodes = self.grid.node_count();
        let mut out = vec![0.0; (self.grid.steps() + 1) * nodes];
        let mut next = vec![0.0; self.op.active_nodes().len()];
        for m in (1..=self.grid.steps()).rev() {
            let ym = self.op.gather(y.level(m));
            let shift: Vec<f64> = ym.iter().map(|z| tau * self.f.derivative(*z)).collect();
            let lu = BandedLu::factor(&self.step, &shift)?;
            let sm = self.op.gather(source.level(m));
            let rhs: Vec<f64> = next.iter().zip(&sm).map(|(p, s)| p + tau * s).collect();
            let phi = solve_transpose_refined(&self.step_t, &shift, &lu, &rhs, opts.linear_tol)?;
            self.op.scatter(&phi, &mut out[m * nodes..(m + 1) * nodes]);
            next = phi;
        }
        Ok(SpaceTimeField::from_raw(self.grid, out))
    }
}

/// Implicit Euler solution of the state equation, Newton per step.
pub fn solve_state(problem: &ParabolicProblem, u: &SpaceTimeField, opts: &SolveOptions) -> Result<SpaceTimeField> {
    problem.forward(u, opts, None)
}

/// State equation with `f` replaced by `f o P_k`; requires `k >= ||y0||_inf`.
pub fn solve_state_truncated(
    problem: &ParabolicProblem,
    u: &SpaceTimeField,
    k: f64,
    opts: &SolveOptions,
) -> Result<SpaceTimeField> {
    if !(k > 0.0) {
        return Err(argument(format!("truncation level k = {k} must be positive")));
    }
    let y0max = problem.y0.max_abs();
    if k < y0max {
        return Err(argument(format!("truncation level k = {k} below ||y0||_inf = {y0max}")));
    }
    problem.forward(u, opts, Some(k))
}

/// Backward adjoint `-phi_t + A* phi + f'(y) phi = source`, `phi(T) = 0`.
pub fn solve_adjoint(
    problem: &ParabolicProblem,
    y: &SpaceTimeField,
    source: AdjointSource,
    opts: &SolveOptions,
) -> Result<SpaceTimeField> {
    if y.grid() != &problem.grid {
        return Err(argument("state lives on a different space-time grid"));
    }
    if !y.is_finite() {
        return Err(validation("state has non-finite values"));
    }
    let src = match source {
        AdjointSource::Tracking => y.axpy(-1.0, &problem.yd)?,
        AdjointSource::StateOnly => y.clone(),
        AdjointSource::TargetOnly => problem.yd.clone(),
    };
    problem.backward(y, &src, opts)
}

/// Adjoint with an arbitrary source; the transpose of [`linearized_state`].
pub fn solve_adjoint_with_source(
    problem: &ParabolicProblem,
    y: &SpaceTimeField,
    source: &SpaceTimeField,
    opts: &SolveOptions,
) -> Result<SpaceTimeField> {
    if y.grid() != &problem.grid || source.grid() != &problem.grid {
        return Err(argument("state or source lives on a different space-time grid"));
    }
    problem.backward(y, source, opts)
}

/// Derivative of the discrete control-to-state map at the state `y` applied to `v`.
pub fn linearized_state(
    problem: &ParabolicProblem,
    y: &SpaceTimeField,
    v: &SpaceTimeField,
    opts: &SolveOptions,
) -> Result<SpaceTimeField> {
    problem.check_control(v)?;
    let tau = problem.grid.tau();
    let nodes = problem.grid.node_count();
    let mut out = vec![0.0; (problem.grid.steps() + 1) * nodes];
    let mut prev = vec![0.0; problem.op.active_nodes().len()];
    for m in 1..=problem.grid.steps() {
        let ym = problem.op.gather(y.level(m));
        let shift: Vec<f64> = ym.iter().map(|z| tau * problem.f.derivative(*z)).collect();
        let lu = BandedLu::factor(&problem.step, &shift)?;
        let vm = problem.op.gather(v.level(m));
        let rhs: Vec<f64> = prev.iter().zip(&vm).map(|(p, s)| p + tau * s).collect();
        let dy = crate::newton::solve_refined(&problem.step, &shift, &lu, &rhs, opts.linear_tol)?;
        problem.op.scatter(&dy, &mut out[m * nodes..(m + 1) * nodes]);
        prev = dy;
    }
    Ok(SpaceTimeField::from_raw(problem.grid, out))
}

/// Discrete energy ratio
/// `(||y||_{L^inf L^2} + ||y||_{L^2 H^1_0} + ||f(y)||_{L^2(Q)}) / (||u||_{L^2(Q)} + ||y0||_inf)`.
pub fn energy_ratio(problem: &ParabolicProblem, u: &SpaceTimeField, opts: &SolveOptions) -> Result<f64> {
    let denom = lp_norm(u, 2.0)? + problem.y0.max_abs();
    if !(denom > 0.0) {
        return Err(argument("energy ratio needs ||u|| + ||y0||_inf > 0"));
    }
    let y = solve_state(problem, u, opts)?;
    let grid = problem.grid;
    let w = grid.trapezoid_weights();
    let tau = grid.tau();
    let sup_l2 = (0..=grid.steps()).map(|m| weighted_lp(y.level(m), &w, 2.0)).fold(0.0, f64::max);
    let h1 = (1..=grid.steps()).map(|m| tau * h1_seminorm_sq(&grid, y.level(m))).sum::<f64>().sqrt();
    let fy: Vec<f64> = y.values().iter().map(|v| problem.f.value(*v)).collect();
    let fy = SpaceTimeField::new(grid, fy).map_err(|_| validation("f(y) is not finite"))?;
    Ok((sup_l2 + h1 + lp_norm(&fy, 2.0)?) / denom)
}

/// Ratios `||y_{lambda u}||_inf / (lambda ||u||_{L^sigma L^gamma} + ||y0||_inf)`.
pub fn linf_scaling_check(
    problem: &ParabolicProblem,
    u: &SpaceTimeField,
    lambdas: &[f64],
    sigma: f64,
    gamma: f64,
    opts: &SolveOptions,
) -> Result<Vec<(f64, f64)>> {
    let n = problem.grid.dim() as f64;
    if !(sigma >= 2.0 && gamma >= 2.0) || 1.0 / sigma + n / (2.0 * gamma) >= 1.0 {
        return Err(argument(format!(
            "exponents sigma = {sigma}, gamma = {gamma} violate 1/sigma + n/(2 gamma) < 1 with sigma, gamma >= 2"
        )));
    }
    let u_norm = bochner_norm(u, sigma, gamma)?;
    let y0 = problem.y0.max_abs();
    lambdas
        .iter()
        .map(|&lambda| {
            let denom = lambda * u_norm + y0;
            if !(denom > 0.0) {
                return Err(argument(format!("scaled data vanish for lambda = {lambda}")));
            }
            let y = solve_state(problem, &u.scaled(lambda), opts)?;
            let ratio = y.max_abs() / denom;
            if !ratio.is_finite() {
                return Err(Error::Validation(format!("non-finite ratio at lambda = {lambda}")));
            }
            Ok((lambda, ratio))
        })
        .collect()
}

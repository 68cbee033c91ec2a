//! Semilinear elliptic state equation with Neumann boundary control,
//!
//! ```text
//! A y + f(x, y) = g in Omega,   d_nu_A y = u on Gamma,
//! ```
//!
//! discretized as `K y + W w f(y) = W g + B u`, where `K` is the stiffness
//! matrix, `W` the trapezoid node weights and `B` places the boundary
//! quadrature weights of the control on the boundary nodes.

use crate::coefficients::EllipticCoefficients;
use crate::error::{argument, validation, Error, Result};
use crate::field::{BoundaryField, Field, SpatialField};
use crate::grid::GridSpec;
use crate::newton::{solve_refined, solve_transpose_refined, DiagonalSystem};
use crate::nonlinearity::{NonlinearityKind, SpatialNonlinearity};
use crate::operator::{assemble_operator, assemble_stiffness, BoundaryCondition, DiscreteOperator};
use crate::sparse::{BandedLu, CsrMatrix};
use crate::SolveOptions;

#[derive(Debug, Clone)]
pub struct EllipticProblem {
    grid: GridSpec,
    coeffs: EllipticCoefficients,
    f: SpatialNonlinearity,
    g: SpatialField,
    yd: SpatialField,
    alpha: f64,
    stiffness: CsrMatrix,
    stiffness_t: CsrMatrix,
    weights: Vec<f64>,
    boundary: Vec<usize>,
    boundary_weights: Vec<f64>,
}

impl EllipticProblem {
    /// Builds the problem. A nonlinearity with `f(., 0) != 0` is shifted to
    /// `f - f(., 0)` and the difference moved into `g`.
    pub fn new(
        grid: GridSpec,
        coeffs: EllipticCoefficients,
        f: SpatialNonlinearity,
        g: SpatialField,
        yd: SpatialField,
        alpha: f64,
    ) -> Result<Self> {
        let grid = grid.spatial_only();
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(argument(format!("alpha = {alpha} must be positive")));
        }
        if coeffs.grid() != &grid || f.weight().grid() != &grid || g.grid() != &grid || yd.grid() != &grid {
            return Err(argument("coefficients, weight, g and y_d must live on the problem grid"));
        }
        if coeffs.reaction_vanishes() {
            return Err(validation("a_0 must not vanish identically"));
        }
        let base = f.base();
        if let NonlinearityKind::CubicMinusLinear { lambda, .. } = base.kind() {
            if lambda > 0.0 {
                return Err(validation(format!("f must be monotone (Lambda_f = 0), got lambda = {lambda}")));
            }
        }
        if base.lambda_f() != 0.0 {
            return Err(validation(format!("f must be monotone (Lambda_f = 0), got {}", base.lambda_f())));
        }
        let (f, g) = if base.offset() != 0.0 {
            let shift: Vec<f64> =
                g.values().iter().zip(f.weight().values()).map(|(g, w)| g - w * base.offset()).collect();
            (f.without_offset(), SpatialField::new(grid, shift)?)
        } else {
            (f, g)
        };
        let stiffness = assemble_stiffness(&coeffs);
        let stiffness_t = stiffness.transpose();
        Ok(Self {
            grid,
            weights: grid.trapezoid_weights(),
            boundary: grid.boundary_nodes(),
            boundary_weights: grid.boundary_weights(),
            coeffs,
            f,
            g,
            yd,
            alpha,
            stiffness,
            stiffness_t,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn coefficients(&self) -> &EllipticCoefficients {
        &self.coeffs
    }

    pub fn nonlinearity(&self) -> &SpatialNonlinearity {
        &self.f
    }

    /// Source term after absorbing `f(., 0)`.
    pub fn source(&self) -> &SpatialField {
        &self.g
    }

    pub fn target(&self) -> &SpatialField {
        &self.yd
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn with_target(&self, yd: SpatialField) -> Result<Self> {
        Self::new(self.grid, self.coeffs.clone(), self.f.clone(), self.g.clone(), yd, self.alpha)
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(self.grid, self.coeffs.clone(), self.f.clone(), self.g.clone(), self.yd.clone(), alpha)
    }

    /// `W g + B u`.
    fn load(&self, u: &BoundaryField) -> Vec<f64> {
        let mut b: Vec<f64> = self.g.values().iter().zip(&self.weights).map(|(g, w)| g * w).collect();
        for ((&node, &wb), &ub) in self.boundary.iter().zip(&self.boundary_weights).zip(u.values()) {
            b[node] += wb * ub;
        }
        b
    }

    fn potential(&self, y: &SpatialField) -> Vec<f64> {
        (0..y.values().len()).map(|i| self.weights[i] * self.f.derivative(i, y.values()[i])).collect()
    }

    fn check_state(&self, y: &SpatialField) -> Result<()> {
        if y.grid() != &self.grid {
            return Err(argument("state lives on a different grid"));
        }
        if !y.is_finite() {
            return Err(validation("state has non-finite values"));
        }
        Ok(())
    }

    fn check_control(&self, u: &BoundaryField) -> Result<()> {
        if u.grid() != &self.grid {
            return Err(argument("boundary control lives on a different grid"));
        }
        if !u.is_finite() {
            return Err(validation("boundary control has non-finite values"));
        }
        Ok(())
    }
}

/// Newton solution of the discrete weak form, started from zero.
pub fn solve_state_elliptic(problem: &EllipticProblem, u: &BoundaryField, opts: &SolveOptions) -> Result<SpatialField> {
    solve_state_elliptic_from(problem, u, &SpatialField::zeros(problem.grid), opts)
}

/// As [`solve_state_elliptic`], from a given initial iterate.
pub fn solve_state_elliptic_from(
    problem: &EllipticProblem,
    u: &BoundaryField,
    initial: &SpatialField,
    opts: &SolveOptions,
) -> Result<SpatialField> {
    opts.validate()?;
    problem.check_control(u)?;
    problem.check_state(initial)?;
    let rhs = problem.load(u);
    let inv: Vec<f64> = problem.weights.iter().map(|w| 1.0 / w).collect();
    let w = &problem.weights;
    let f = &problem.f;
    let y = DiagonalSystem {
        matrix: &problem.stiffness,
        rhs: &rhs,
        value: |i, z: f64| w[i] * f.value(i, z),
        derivative: |i, z: f64| w[i] * f.derivative(i, z),
        residual_scale: &inv,
    }
    .solve(initial.values().to_vec(), opts, "elliptic state solve", 0)?;
    Ok(SpatialField::from_raw(problem.grid, y))
}

/// Adjoint `A* phi + f_y(., y) phi = y - y_d` with homogeneous conormal data.
pub fn solve_adjoint_elliptic(problem: &EllipticProblem, y: &SpatialField, opts: &SolveOptions) -> Result<SpatialField> {
    problem.check_state(y)?;
    let e = y.axpy(-1.0, &problem.yd)?;
    adjoint_with_source(problem, y, &e, opts)
}

/// Adjoint with an arbitrary source in place of `y - y_d`.
pub fn adjoint_with_source(
    problem: &EllipticProblem,
    y: &SpatialField,
    source: &SpatialField,
    opts: &SolveOptions,
) -> Result<SpatialField> {
    problem.check_state(y)?;
    if source.grid() != &problem.grid {
        return Err(argument("adjoint source lives on a different grid"));
    }
    let shift = problem.potential(y);
    let lu = BandedLu::factor(&problem.stiffness, &shift)?;
    let rhs: Vec<f64> = source.values().iter().zip(&problem.weights).map(|(s, w)| s * w).collect();
    let phi = solve_transpose_refined(&problem.stiffness_t, &shift, &lu, &rhs, opts.linear_tol)?;
    Ok(SpatialField::from_raw(problem.grid, phi))
}

/// Derivative of the discrete control-to-state map at `y` applied to `v`.
pub fn linearized_state_elliptic(
    problem: &EllipticProblem,
    y: &SpatialField,
    v: &BoundaryField,
    opts: &SolveOptions,
) -> Result<SpatialField> {
    problem.check_state(y)?;
    problem.check_control(v)?;
    let shift = problem.potential(y);
    let lu = BandedLu::factor(&problem.stiffness, &shift)?;
    let mut rhs = vec![0.0; problem.grid.node_count()];
    for ((&node, &wb), &vb) in problem.boundary.iter().zip(&problem.boundary_weights).zip(v.values()) {
        rhs[node] += wb * vb;
    }
    let dy = solve_refined(&problem.stiffness, &shift, &lu, &rhs, opts.linear_tol)?;
    Ok(SpatialField::from_raw(problem.grid, dy))
}

/// Restriction to the boundary nodes, in ascending lexicographic order.
pub fn trace(field: &SpatialField) -> BoundaryField {
    let g = field.grid().spatial_only();
    let values = g.boundary_nodes().into_iter().map(|i| field.values()[i]).collect();
    BoundaryField::from_raw(g, values)
}

/// Estimate of the coercivity constant `inf B(y, y) / ||y||^2_{H^1}` over the
/// discrete space, by inverse iteration on the generalized eigenproblem.
///
/// The Rayleigh quotient converges from above; the returned value is shrunk
/// by a relative `1e-8` to stay on the safe side of the infimum.
pub fn coercivity_constant(coeffs: &EllipticCoefficients) -> Result<f64> {
    let grid = *coeffs.grid();
    let k = assemble_stiffness(coeffs);
    let gram = assemble_stiffness(&EllipticCoefficients::laplacian(grid, 1.0)?);
    let lu = BandedLu::factor(&k, &[])?;
    let n = grid.node_count();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    // A start vector with components along every mode.
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i as f64) * 0.7).sin()).collect();
    let mut lambda = f64::INFINITY;
    for _ in 0..2000 {
        let gx = gram.mul_vec(&x);
        let mut next = lu.solve(&gx);
        let norm = dot(&next, &gram.mul_vec(&next)).sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::LinearSolve("inverse iteration broke down".into()));
        }
        next.iter_mut().for_each(|v| *v /= norm);
        let q = dot(&next, &k.mul_vec(&next));
        let done = (lambda - q).abs() <= 1e-13 * q.abs();
        lambda = q;
        x = next;
        if done {
            break;
        }
    }
    if !(lambda > 0.0) {
        return Err(validation(format!("bilinear form not coercive: Lambda_B = {lambda}")));
    }
    Ok(lambda * (1.0 - 1e-8))
}

/// Distributed-control variant with homogeneous Dirichlet data:
/// `A y + w f(y) = u` in the interior, `y = 0` on the boundary.
pub fn solve_dirichlet_distributed(
    coeffs: &EllipticCoefficients,
    f: &SpatialNonlinearity,
    u: &SpatialField,
    opts: &SolveOptions,
) -> Result<SpatialField> {
    opts.validate()?;
    let grid = *coeffs.grid();
    if u.grid() != &grid || f.weight().grid() != &grid {
        return Err(argument("control and weight must live on the coefficient grid"));
    }
    if f.base().value(0.0) != 0.0 {
        return Err(validation("f(., 0) = 0 violated"));
    }
    let op: DiscreteOperator = assemble_operator(coeffs, BoundaryCondition::Dirichlet);
    let active = op.active_nodes().to_vec();
    let rhs = op.gather(u.values());
    let ones = vec![1.0; active.len()];
    let y = DiagonalSystem {
        matrix: op.matrix(),
        rhs: &rhs,
        value: |i, z: f64| f.value(active[i], z),
        derivative: |i, z: f64| f.derivative(active[i], z),
        residual_scale: &ones,
    }
    .solve(vec![0.0; active.len()], opts, "dirichlet elliptic solve", 0)?;
    let mut full = vec![0.0; grid.node_count()];
    op.scatter(&y, &mut full);
    Ok(SpatialField::from_raw(grid, full))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::Nonlinearity;
    use crate::operator::bilinear_form;
    use crate::quadrature::h1_norm;

    fn problem(nx: usize, f: Nonlinearity, g: f64) -> EllipticProblem {
        let grid = GridSpec::unit(2, nx).unwrap();
        EllipticProblem::new(
            grid,
            EllipticCoefficients::laplacian(grid, 1.0).unwrap(),
            SpatialNonlinearity::uniform(f, grid),
            SpatialField::constant(grid, g),
            SpatialField::zeros(grid),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn zero_data_zero_state() {
        let p = problem(7, Nonlinearity::cubic(1.0).unwrap(), 0.0);
        let y = solve_state_elliptic(&p, &BoundaryField::zeros(*p.grid()), &SolveOptions::default()).unwrap();
        assert!(y.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn constant_source_reproduces_constants() {
        let p = problem(9, Nonlinearity::zero(), 1.0);
        let y = solve_state_elliptic(&p, &BoundaryField::zeros(*p.grid()), &SolveOptions::default()).unwrap();
        assert!(y.values().iter().all(|v| (v - 1.0).abs() < 1e-10));
    }

    #[test]
    fn offset_moves_into_source() {
        let grid = GridSpec::unit(2, 5).unwrap();
        let p = EllipticProblem::new(
            grid,
            EllipticCoefficients::laplacian(grid, 1.0).unwrap(),
            SpatialNonlinearity::uniform(Nonlinearity::cubic(1.0).unwrap().with_offset(0.5), grid),
            SpatialField::constant(grid, 1.0),
            SpatialField::zeros(grid),
            1.0,
        )
        .unwrap();
        assert!(p.source().values().iter().all(|v| (v - 0.5).abs() < 1e-15));
        assert_eq!(p.nonlinearity().base().offset(), 0.0);
    }

    #[test]
    fn rejects_nonmonotone_and_vanishing_reaction() {
        let grid = GridSpec::unit(2, 5).unwrap();
        let c = EllipticCoefficients::laplacian(grid, 1.0).unwrap();
        let z = SpatialField::zeros(grid);
        let f = SpatialNonlinearity::uniform(Nonlinearity::cubic_minus_linear(1.0, 2.0).unwrap(), grid);
        assert!(EllipticProblem::new(grid, c.clone(), f, z.clone(), z.clone(), 1.0).is_err());
        let c0 = EllipticCoefficients::laplacian(grid, 0.0).unwrap();
        let f = SpatialNonlinearity::uniform(Nonlinearity::zero(), grid);
        assert!(EllipticProblem::new(grid, c0, f, z.clone(), z, 1.0).is_err());
    }

    #[test]
    fn trace_of_coordinate_field() {
        let grid = GridSpec::unit(2, 5).unwrap();
        let x = SpatialField::from_fn(grid, |p| p[0]).unwrap();
        let t = trace(&x);
        assert_eq!(t.values().len(), 16);
        let expected: Vec<f64> = grid.boundary_nodes().iter().map(|&i| grid.coords(i)[0]).collect();
        assert_eq!(t.values(), expected.as_slice());
        assert!(t.values().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn coercivity_of_h1_form_is_one() {
        let grid = GridSpec::unit(2, 7).unwrap();
        let c = EllipticCoefficients::laplacian(grid, 1.0).unwrap();
        let l = coercivity_constant(&c).unwrap();
        assert!((l - 1.0).abs() < 1e-7, "{l}");
        let c2 = EllipticCoefficients::laplacian(grid, 0.5).unwrap();
        let l2 = coercivity_constant(&c2).unwrap();
        assert!(l2 > 0.0 && l2 <= 0.5 + 1e-12);
        for s in 0..5 {
            let y = SpatialField::from_fn(grid, |p| ((s + 1) as f64 * p[0]).sin() + p[1] * p[1]).unwrap();
            let b = bilinear_form(&y, &y, &c2).unwrap();
            assert!(b >= l2 * h1_norm(&y).powi(2) * (1.0 - 1e-12));
        }
    }

    #[test]
    fn dirichlet_variant_is_zero_on_boundary() {
        let grid = GridSpec::unit(2, 9).unwrap();
        let c = EllipticCoefficients::laplacian(grid, 0.0).unwrap();
        let f = SpatialNonlinearity::uniform(Nonlinearity::cubic(1.0).unwrap(), grid);
        let u = SpatialField::constant(grid, 10.0);
        let y = solve_dirichlet_distributed(&c, &f, &u, &SolveOptions::default()).unwrap();
        for i in grid.boundary_nodes() {
            assert_eq!(y.values()[i], 0.0);
        }
        assert!(y.values().iter().all(|v| *v >= 0.0));
        assert!(y.max_abs() > 0.0);
    }
}

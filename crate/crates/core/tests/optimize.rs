mod common;

use common::*;
use proptest::prelude::*;
use semicontrol::elliptic::{solve_state_elliptic, EllipticProblem};
use semicontrol::optimize::{
    gradient, homotopy, objective, optimality_of, optimality_report, project_box, solve_truncated, solve_unconstrained,
    vi_residual, ControlProblem, Execution, OptimizeOptions, Status,
};
use semicontrol::parabolic::{solve_state, ParabolicProblem};
use semicontrol::{
    EllipticCoefficients, Error, Field, GridSpec, Nonlinearity, SolveOptions, SpaceTimeField, SpatialField,
    SpatialNonlinearity,
};

fn cubic() -> Nonlinearity {
    Nonlinearity::cubic(1.0).unwrap()
}

fn opts(grad_tol: f64) -> OptimizeOptions {
    OptimizeOptions { grad_tol, max_iter: 5000, ..OptimizeOptions::default() }
}

fn random_control<P: ControlProblem>(p: &P, seed: u64, amp: f64) -> P::Control {
    let mut r = rng(seed);
    p.make_control(random_values(&mut r, p.control_weights().len(), -amp, amp)).unwrap()
}

fn control_distance<P: ControlProblem>(p: &P, a: &P::Control, b: &P::Control) -> f64 {
    let d: Vec<f64> = a.values().iter().zip(b.values()).map(|(x, y)| x - y).collect();
    weighted_norm(&d, &p.control_weights())
}

/// A fixture whose target is the uncontrolled state, so `u = 0` is optimal.
fn stationary_heat() -> ParabolicProblem {
    let p = heat_fixture(2, 9, 6, cubic(), 1.0);
    let s = p.grid().spatial_only();
    let p = p.with_y0(SpatialField::from_fn(s, |x| x[0] * (1.0 - x[0]) * x[1]).unwrap()).unwrap();
    let y = solve_state(&p, &p.zero_control(), &SolveOptions::default()).unwrap();
    p.with_target(y).unwrap()
}

#[test]
fn zero_data_give_zero_objective() {
    let g = GridSpec::unit(1, 9).unwrap().with_time(4, 1.0).unwrap();
    let s = g.spatial_only();
    let p = ParabolicProblem::new(
        g,
        EllipticCoefficients::laplacian(s, 0.0).unwrap(),
        cubic(),
        SpatialField::zeros(s),
        SpaceTimeField::zeros(g),
        1.0,
    )
    .unwrap();
    assert_eq!(objective(&p, &p.zero_control(), &SolveOptions::default()).unwrap(), 0.0);
}

#[test]
fn objective_dominates_control_energy() {
    let p = heat_fixture(2, 9, 6, cubic(), 0.3);
    for seed in 0..5 {
        let u = random_control(&p, seed, 4.0);
        let j = objective(&p, &u, &SolveOptions::default()).unwrap();
        let energy = weighted_norm(u.values(), &p.control_weights()).powi(2);
        assert!(j >= 0.5 * p.alpha() * energy);
    }
}

#[test]
fn objective_matches_dense_linear_oracle() {
    let p = heat_fixture(1, 17, 10, Nonlinearity::zero(), 0.7);
    let dense = DenseHeat::new(1, 17, 10, 0.5, 0.0);
    let u = random_control(&p, 1, 3.0);
    let y = dense.state(u.values());
    let w = dense.weights();
    let e: Vec<f64> = y.iter().zip(p.target().values()).map(|(a, b)| a - b).collect();
    let oracle = 0.5 * weighted_norm(&e, &w).powi(2) + 0.35 * weighted_norm(u.values(), &w).powi(2);
    let j = objective(&p, &u, &SolveOptions::default()).unwrap();
    assert!((j - oracle).abs() <= 1e-10 * oracle.max(1.0));
}

#[test]
fn gradient_vanishes_at_a_stationary_control() {
    let p = stationary_heat();
    let g = gradient(&p, &p.zero_control(), &SolveOptions::default()).unwrap();
    assert!(g.values().iter().all(|v| *v == 0.0));
}

#[test]
fn linear_problems_have_affine_gradients() {
    let p = heat_fixture(2, 9, 6, Nonlinearity::zero(), 0.5);
    let o = SolveOptions::default();
    let (u1, u2) = (random_control(&p, 2, 1.0), random_control(&p, 3, 1.0));
    let g12 = gradient(&p, &u1.axpy(1.0, &u2).unwrap(), &o).unwrap();
    let g1 = gradient(&p, &u1, &o).unwrap();
    let g2 = gradient(&p, &u2, &o).unwrap();
    let g0 = gradient(&p, &p.zero_control(), &o).unwrap();
    let worst = (0..g0.values().len())
        .map(|i| (g12.values()[i] - g1.values()[i] - g2.values()[i] + g0.values()[i]).abs())
        .fold(0.0f64, f64::max);
    assert!(worst <= 1e-12);
}

#[test]
fn stationary_start_needs_no_iterations() {
    let p = stationary_heat();
    let res = solve_unconstrained(&p, &p.zero_control(), &opts(1e-8)).unwrap();
    assert_eq!(res.status, Status::Converged);
    assert_eq!(res.iterations, 0);
    assert!(res.u.values().iter().all(|v| *v == 0.0));
}

#[test]
fn convex_problem_has_one_minimizer() {
    let p = heat_fixture(2, 9, 6, Nonlinearity::zero(), 0.2);
    let o = opts(1e-10);
    let a = solve_unconstrained(&p, &p.zero_control(), &o).unwrap();
    let b = solve_unconstrained(&p, &random_control(&p, 4, 5.0), &o).unwrap();
    assert!((a.objective - b.objective).abs() <= 1e-8);
    assert!(control_distance(&p, &a.u, &b.u) <= 1e-7);
}

#[test]
fn multistart_cubic_runs_agree() {
    let p = heat_fixture(2, 9, 6, cubic(), 0.1);
    let p = p.with_target(p.target().scaled(2.0)).unwrap();
    let o = opts(1e-9);
    let runs: Vec<_> = (0..3).map(|seed| solve_unconstrained(&p, &random_control(&p, 40 + seed, 3.0), &o).unwrap()).collect();
    for r in &runs {
        assert_eq!(r.status, Status::Converged);
        assert!((r.objective - runs[0].objective).abs() <= 1e-8);
    }
}

#[test]
fn objective_history_is_monotone() {
    for alpha in [0.1, 1.0] {
        let p = heat_fixture(2, 9, 6, cubic(), alpha);
        let res = solve_unconstrained(&p, &random_control(&p, 5, 2.0), &opts(1e-9)).unwrap();
        for w in res.j_history.windows(2) {
            assert!(w[1] <= w[0] + 10.0 * f64::EPSILON * w[0].abs());
        }
        assert_eq!(res.residual_history.len(), res.j_history.len());
        let e = neumann_fixture(9, cubic(), alpha);
        let res = solve_unconstrained(&e, &e.zero_control(), &opts(1e-9)).unwrap();
        for w in res.j_history.windows(2) {
            assert!(w[1] <= w[0] + 10.0 * f64::EPSILON * w[0].abs());
        }
    }
}

#[test]
fn final_residual_matches_recomputation() {
    let p = neumann_fixture(9, cubic(), 0.3);
    let res = solve_unconstrained(&p, &p.zero_control(), &opts(1e-9)).unwrap();
    let rep = optimality_report(&p, &res, &SolveOptions::default()).unwrap();
    assert!((res.residual() - rep.grad_norm).abs() <= 1e-12);
    assert!((res.objective - rep.objective).abs() <= 1e-12 * res.objective);
}

#[test]
fn iteration_cap_reports_max_iter() {
    let p = heat_fixture(2, 9, 6, cubic(), 0.01);
    let o = OptimizeOptions { max_iter: 2, ..opts(1e-12) };
    let res = solve_unconstrained(&p, &p.zero_control(), &o).unwrap();
    assert_eq!(res.status, Status::MaxIter);
    assert_eq!(res.iterations, 2);
}

#[test]
fn inactive_box_returns_the_reference() {
    for alpha in [0.1, 1.0] {
        let p = heat_fixture(2, 9, 6, cubic(), alpha);
        let o = opts(1e-9);
        let ubar = solve_unconstrained(&p, &p.zero_control(), &o).unwrap();
        let m = 2.0 * ubar.u.max_abs();
        let res = solve_truncated(&p, &ubar.u, m, 1.0, &o).unwrap();
        assert_eq!(res.status, Status::Converged);
        assert!(control_distance(&p, &res.u, &ubar.u) <= o.grad_tol);
        assert!(!res.m_active && !res.ball_active);
    }
}

#[test]
fn tiny_box_clips_where_the_proximal_value_exceeds_it() {
    let p = neumann_fixture(9, cubic(), 0.5);
    let o = opts(1e-9);
    let ubar = solve_unconstrained(&p, &p.zero_control(), &o).unwrap();
    let m = 1e-6;
    let res = solve_truncated(&p, &ubar.u, m, 1e3, &o).unwrap();
    assert!(res.m_active);
    // The proximal value at the solution decides which nodes sit on the box.
    let y = solve_state_elliptic(&p, &res.u, &o.solve).unwrap();
    let phi = p.adjoint_on_controls(&p.adjoint(&y, &o.solve).unwrap());
    for ((u, r), f) in res.u.values().iter().zip(ubar.u.values()).zip(phi.values()) {
        let prox = (r - f) / (1.0 + p.alpha());
        if prox.abs() > m {
            assert_eq!(u.abs(), m);
            assert_eq!(u.signum(), prox.signum());
        }
        assert!(u.abs() <= m);
    }
}

#[test]
fn violated_ball_is_flagged_not_enforced() {
    let p = heat_fixture(2, 9, 6, cubic(), 0.1);
    let p = p.with_target(p.target().scaled(3.0)).unwrap();
    let o = opts(1e-9);
    let ubar = solve_unconstrained(&p, &p.zero_control(), &o).unwrap();
    let res = solve_truncated(&p, &ubar.u, 0.25, 1e-3, &o).unwrap();
    assert_eq!(res.status, Status::Converged);
    assert!(res.ball_active);
    assert!(res.detail.as_deref().unwrap_or("").contains("ball constraint"));
}

#[test]
fn zero_minimizer_homotopy_stays_at_zero() {
    let p = stationary_heat();
    let o = opts(1e-9);
    let h = homotopy(&p, &p.zero_control(), &o, Execution::Sequential).unwrap();
    assert!(h.stages.iter().all(|s| s.distance <= 10.0 * o.grad_tol));
}

#[test]
fn homotopy_distances_shrink_in_both_problem_families() {
    let o = opts(1e-9);
    let p = heat_fixture(2, 9, 6, cubic(), 0.1);
    let p = p.with_target(p.target().scaled(1.5)).unwrap();
    let h = homotopy(&p, &p.zero_control(), &o, Execution::Parallel(2)).unwrap();
    assert!(h.stages.last().unwrap().distance <= h.stages[0].distance);
    let ubar = h.unconstrained.u.max_abs();
    for s in h.stages.iter().filter(|s| s.m >= ubar) {
        assert!(s.distance <= 10.0 * o.grad_tol && !s.result.m_active);
    }

    let e = neumann_fixture(9, cubic(), 0.05);
    let e = e.with_target(e.target().scaled(3.0)).unwrap();
    let h = homotopy(&e, &e.zero_control(), &o, Execution::Sequential).unwrap();
    let d: Vec<f64> = h.stages.iter().map(|s| s.distance).collect();
    assert!(d[0] > 0.0);
    assert!(d.windows(2).all(|w| w[1] <= w[0] + 10.0 * o.grad_tol));
}

#[test]
fn parallel_homotopy_is_bitwise_sequential() {
    let e = neumann_fixture(9, cubic(), 0.05);
    let e = e.with_target(e.target().scaled(3.0)).unwrap();
    let o = opts(1e-9);
    let a = homotopy(&e, &e.zero_control(), &o, Execution::Sequential).unwrap();
    let b = homotopy(&e, &e.zero_control(), &o, Execution::Parallel(0)).unwrap();
    for (x, y) in a.stages.iter().zip(&b.stages) {
        assert_eq!(x.result.u.values(), y.result.u.values());
        assert_eq!(x.distance.to_bits(), y.distance.to_bits());
    }
}

#[test]
fn vi_residual_vanishes_on_projections_and_reduces_without_box() {
    let p = heat_fixture(1, 9, 4, cubic(), 0.4);
    let phi = random_control(&p, 6, 2.0);
    let r = random_control(&p, 7, 2.0);
    let m = 0.5;
    let proj: Vec<f64> = phi.values().iter().zip(r.values()).map(|(f, r)| ((r - f) / 1.4).clamp(-m, m)).collect();
    let u = p.make_control(proj).unwrap();
    assert_eq!(vi_residual(&u, &phi, &r, m, 0.4).unwrap(), 0.0);
    let v = random_control(&p, 8, 1.0);
    let free: Vec<f64> = v.values().iter().zip(phi.values()).zip(r.values()).map(|((v, f), r)| v + (f - r) / 1.4).collect();
    let expect = weighted_norm(&free, &p.control_weights());
    assert!((vi_residual(&v, &phi, &r, f64::INFINITY, 0.4).unwrap() - expect).abs() <= 1e-14 * expect.max(1.0));
}

/// `min_v <grad, v - u>` over random feasible `v`; nonnegative iff the
/// variational inequality holds up to sampling.
fn brute_force_vi(grad: &[f64], u: &[f64], w: &[f64], m: f64, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst = f64::INFINITY;
    for i in 0..10_000 {
        let v: Vec<f64> = if i % 2 == 0 {
            random_values(&mut r, u.len(), -m, m)
        } else {
            // Vertices of the box and single-coordinate moves probe the faces.
            let j = i / 2 % u.len();
            let mut v = u.to_vec();
            v[j] = if random_values(&mut r, 1, 0.0, 1.0)[0] < 0.5 { -m } else { m };
            v
        };
        let d: Vec<f64> = v.iter().zip(u).map(|(a, b)| a - b).collect();
        worst = worst.min(weighted_dot(grad, &d, w));
    }
    worst
}

#[test]
fn vi_residual_agrees_with_brute_force_on_twelve_nodes() {
    let g = GridSpec::unit(2, 4).unwrap();
    let p = EllipticProblem::new(
        g,
        EllipticCoefficients::laplacian(g, 1.0).unwrap(),
        SpatialNonlinearity::uniform(cubic(), g),
        SpatialField::from_fn(g, |x| 1.0 + x[0]).unwrap(),
        SpatialField::from_fn(g, |x| 3.0 - 2.0 * x[1]).unwrap(),
        0.1,
    )
    .unwrap();
    assert_eq!(p.control_weights().len(), 12);
    let o = opts(1e-11);
    let ubar = solve_unconstrained(&p, &p.zero_control(), &o).unwrap();
    let m = 0.5 * ubar.u.max_abs();
    let res = solve_truncated(&p, &ubar.u, m, 1e3, &o).unwrap();
    let w = p.control_weights();
    let prox_grad = |u: &[f64]| -> (Vec<f64>, f64) {
        let c = p.make_control(u.to_vec()).unwrap();
        let y = p.state(&c, &o.solve).unwrap();
        let phi = p.adjoint_on_controls(&p.adjoint(&y, &o.solve).unwrap());
        let g = u.iter().zip(phi.values()).zip(ubar.u.values()).map(|((u, f), r)| f + p.alpha() * u + u - r).collect();
        (g, vi_residual(&c, &phi, &ubar.u, m, p.alpha()).unwrap())
    };
    let (grad, resid) = prox_grad(res.u.values());
    assert!(resid <= 1e-10);
    assert!(brute_force_vi(&grad, res.u.values(), &w, m, 9) >= -1e-9);

    // A feasible point off the solution: both certificates detect it.
    let moved: Vec<f64> = res.u.values().iter().map(|v| 0.5 * v).collect();
    let (grad, resid) = prox_grad(&moved);
    assert!(resid > 1e-3);
    assert!(brute_force_vi(&grad, &moved, &w, m, 10) < -1e-4);
}

#[test]
fn optimality_report_restates_convergence() {
    for alpha in [0.1, 1.0] {
        let p = heat_fixture(2, 9, 6, cubic(), alpha);
        let o = opts(1e-10);
        let res = solve_unconstrained(&p, &p.zero_control(), &o).unwrap();
        let rep = optimality_report(&p, &res, &o.solve).unwrap();
        let tol = 10.0 * o.grad_tol / weighted_norm(&[1.0], &[p.control_weights().iter().copied().filter(|w| *w > 0.0).fold(f64::INFINITY, f64::min)]);
        assert!(rep.consistency * alpha <= tol, "{} vs {tol}", rep.consistency);
        assert!(rep.u_linf <= rep.phi_linf / alpha + tol);
        let fine = SolveOptions { linear_tol: o.solve.linear_tol / 2.0, ..o.solve };
        let again = optimality_of(&p, &res.u, &fine).unwrap();
        assert!((again.objective - rep.objective).abs() <= 1e-8);
        assert!((again.grad_norm - rep.grad_norm).abs() <= 1e-8);
        assert!((again.y_linf - rep.y_linf).abs() <= 1e-8);
    }
}

#[test]
fn report_refuses_unconverged_results() {
    let p = heat_fixture(2, 9, 6, cubic(), 0.01);
    let o = OptimizeOptions { max_iter: 1, ..opts(1e-12) };
    let res = solve_unconstrained(&p, &p.zero_control(), &o).unwrap();
    assert!(matches!(optimality_report(&p, &res, &o.solve), Err(Error::Argument(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn box_projection_is_idempotent_and_nonexpansive(
        a in proptest::collection::vec(-10.0f64..10.0, 1..40),
        shift in -5.0f64..5.0,
        m in 0.01f64..5.0,
        seed in 0u64..1000,
    ) {
        let b: Vec<f64> = a.iter().map(|v| v + shift).collect();
        let w = random_values(&mut rng(seed), a.len(), 0.0, 1.0);
        let pa = project_box(&a, m);
        prop_assert_eq!(project_box(&pa, m), pa.clone());
        let pb = project_box(&b, m);
        let dp: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| x - y).collect();
        let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        prop_assert!(weighted_norm(&dp, &w) <= weighted_norm(&d, &w) + 1e-15);
    }
}

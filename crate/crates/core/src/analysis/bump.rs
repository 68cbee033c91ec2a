//! The smooth cut-off `phi(x, s) = psi(|x|) psi(|s|)`, equal to one on
//! `{|x| <= 1, |s| <= 1}` and vanishing outside `{|x| < 2, |s| < 2}`, with
//!
//! ```text
//! psi(r) = S(2 - r) / (S(2 - r) + S(r - 1)),   S(t) = exp(-1/t) for t > 0, else 0.
//! ```

use std::f64::consts::PI;
use std::sync::OnceLock;

use super::quad::integrate_pieces;
use crate::error::{argument, Result};

/// `(S, S', S'')` at `t`.
fn s_fn(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let s = (-1.0 / t).exp();
    if s == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let it = 1.0 / t;
    let it2 = it * it;
    (s, s * it2, s * (it2 * it2 - 2.0 * it2 * it))
}

/// `(psi, psi', psi'')` at `r >= 0`.
pub fn profile(r: f64) -> (f64, f64, f64) {
    if r <= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    if r >= 2.0 {
        return (0.0, 0.0, 0.0);
    }
    let (a, sa1, sa2) = s_fn(2.0 - r);
    let (b, b1, b2) = s_fn(r - 1.0);
    // d/dr S(2 - r) = -S'(2 - r).
    let a1 = -sa1;
    let a2 = sa2;
    let d = a + b;
    let num = a1 * b - a * b1;
    let num1 = a2 * b - a * b2;
    let psi = a / d;
    let psi1 = num / (d * d);
    let psi2 = (num1 * d - 2.0 * num * (a1 + b1)) / (d * d * d);
    (psi, psi1, psi2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BumpDerivative {
    Value,
    /// Derivative in the time-like variable `s`.
    Dt,
    Grad,
    /// Row-major spatial Hessian.
    Hess,
}

/// Evaluates `phi` or one of its derivatives at `(x, s)`.
pub fn bump_eval(x: &[f64], s: f64, which: BumpDerivative) -> Vec<f64> {
    let n = x.len();
    let rho = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let (px, px1, px2) = profile(rho);
    let (ps, ps1, _) = profile(s.abs());
    match which {
        BumpDerivative::Value => vec![px * ps],
        BumpDerivative::Dt => vec![px * ps1 * s.signum()],
        BumpDerivative::Grad => {
            if px1 == 0.0 {
                return vec![0.0; n];
            }
            x.iter().map(|xi| px1 * xi / rho * ps).collect()
        }
        BumpDerivative::Hess => {
            let mut h = vec![0.0; n * n];
            if px1 == 0.0 && px2 == 0.0 {
                return h;
            }
            for i in 0..n {
                for j in 0..n {
                    let ninj = x[i] * x[j] / (rho * rho);
                    let delta = if i == j { 1.0 } else { 0.0 };
                    h[i * n + j] = (px2 * ninj + px1 / rho * (delta - ninj)) * ps;
                }
            }
            h
        }
    }
}

/// Spatial Laplacian of `phi` at radius `rho` and time-like `s`, in dimension `n`.
pub fn bump_laplacian(rho: f64, s: f64, n: usize) -> f64 {
    let (_, p1, p2) = profile(rho);
    if p1 == 0.0 && p2 == 0.0 {
        return 0.0;
    }
    (p2 + (n as f64 - 1.0) * p1 / rho) * profile(s.abs()).0
}

/// Surface area of the unit sphere in `R^n`.
pub fn sphere_area(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => {
            // 2 pi^{n/2} / Gamma(n/2) through the recursion A_n = 2 pi / (n - 2) A_{n-2}.
            2.0 * PI / (n as f64 - 2.0) * sphere_area(n - 2)
        }
    }
}

const TOL: f64 = 1e-13;
const BREAKS: [f64; 3] = [0.0, 1.0, 2.0];
const TRANSITION: [f64; 2] = [1.0, 2.0];

/// `int_{R^n} g(|x|) dx` for a radial profile supported in `|x| <= 2`.
pub fn radial_integral(n: usize, g: impl Fn(f64) -> f64) -> f64 {
    sphere_area(n) * integrate_pieces(|r| g(r) * r.powi(n as i32 - 1), &BREAKS, TOL)
}

/// `int_R h(|s|) ds` for a profile supported in `|s| <= 2`.
pub fn line_integral(h: impl Fn(f64) -> f64) -> f64 {
    2.0 * integrate_pieces(h, &BREAKS, TOL)
}

/// Norm constants of the bump in dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpNorms {
    /// `||d_s phi||^2_{L^2(R^{n+1})}`.
    pub dt: f64,
    /// `sum_ij ||d_ij phi||^2_{L^2(R^{n+1})}`.
    pub dxx: f64,
    /// `||Laplace_x phi||^2_{L^2(R^{n+1})}`.
    pub laplacian: f64,
}

fn compute_norms(n: usize) -> BumpNorms {
    let nf = n as f64;
    let psi_sq_x = radial_integral(n, |r| profile(r).0.powi(2));
    let psi_sq_s = line_integral(|s| profile(s).0.powi(2));
    let dpsi_sq_s = 2.0 * integrate_pieces(|s| profile(s).1.powi(2), &TRANSITION, TOL);
    let hess_sq = sphere_area(n)
        * integrate_pieces(
            |r| {
                let (_, p1, p2) = profile(r);
                (p2 * p2 + (nf - 1.0) * (p1 / r).powi(2)) * r.powi(n as i32 - 1)
            },
            &TRANSITION,
            TOL,
        );
    let lap_sq = sphere_area(n)
        * integrate_pieces(
            |r| {
                let (_, p1, p2) = profile(r);
                (p2 + (nf - 1.0) * p1 / r).powi(2) * r.powi(n as i32 - 1)
            },
            &TRANSITION,
            TOL,
        );
    BumpNorms { dt: psi_sq_x * dpsi_sq_s, dxx: hess_sq * psi_sq_s, laplacian: lap_sq * psi_sq_s }
}

/// Cached norm constants for `n` in `{1, 2, 3}`.
pub fn bump_norms(n: usize) -> Result<BumpNorms> {
    static CACHE: [OnceLock<BumpNorms>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    if !(1..=3).contains(&n) {
        return Err(argument(format!("bump norms are tabulated for n in 1..=3, got {n}")));
    }
    Ok(*CACHE[n - 1].get_or_init(|| compute_norms(n)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_and_support() {
        assert_eq!(bump_eval(&[0.0, 0.0], 0.0, BumpDerivative::Value), vec![1.0]);
        assert_eq!(bump_eval(&[3.0, 0.0], 0.0, BumpDerivative::Value), vec![0.0]);
        assert_eq!(bump_eval(&[0.5, 0.5], 0.9, BumpDerivative::Dt), vec![0.0]);
        assert_eq!(bump_eval(&[0.0, 0.0], 2.5, BumpDerivative::Value), vec![0.0]);
        let mid = profile(1.5).0;
        assert!((mid - 0.5).abs() < 1e-15);
    }

    #[test]
    fn derivatives_match_differences() {
        for &r in &[1.1, 1.3, 1.5, 1.77, 1.95] {
            let h = 1e-5;
            let (_, d1, d2) = profile(r);
            let fd1 = (profile(r + h).0 - profile(r - h).0) / (2.0 * h);
            let fd2 = (profile(r + h).1 - profile(r - h).1) / (2.0 * h);
            assert!((d1 - fd1).abs() < 1e-7 * (1.0 + d1.abs()), "{r}");
            assert!((d2 - fd2).abs() < 1e-6 * (1.0 + d2.abs()), "{r}");
        }
    }

    #[test]
    fn hessian_trace_is_laplacian() {
        let x = [1.2, -0.4, 0.3];
        let rho = (1.44f64 + 0.16 + 0.09).sqrt();
        let h = bump_eval(&x, 0.5, BumpDerivative::Hess);
        let tr = h[0] + h[4] + h[8];
        assert!((tr - bump_laplacian(rho, 0.5, 3)).abs() < 1e-12);
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-12);
        assert!((sphere_area(5) - 8.0 * PI * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn norms_are_positive_and_cached() {
        let a = bump_norms(2).unwrap();
        let b = bump_norms(2).unwrap();
        assert_eq!(a, b);
        assert!(a.dt > 0.0 && a.dxx > 0.0 && a.laplacian > 0.0);
        assert!(bump_norms(4).is_err());
    }
}

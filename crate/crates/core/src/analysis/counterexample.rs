//! The dyadic bump series
//!
//! ```text
//! y(x, t) = sum_k k^-1 phi(2^k x, 2^{2k} (t - 1))
//! ```
//!
//! on `B_2(0) x (0, 2)`: its time derivative and spatial Hessian are square
//! integrable in dimensions two and three, yet `y >= H_m` (the harmonic number)
//! on the cylinder `|x| < 2^-m`, `|t - 1| <= 2^-2m`, so `y` is unbounded.

use super::bump::{bump_laplacian, bump_norms, profile, sphere_area};
use super::quad::integrate_pieces;
use crate::error::{argument, Result};

/// Largest admissible truncation index; keeps `4^K` well inside `f64`.
pub const MAX_TERMS: usize = 256;

fn check(n: usize, k: usize) -> Result<()> {
    if !(2..=3).contains(&n) {
        return Err(argument(format!("the counterexample is evaluated for n in {{2, 3}}, got n = {n}")));
    }
    if k == 0 || k > MAX_TERMS {
        return Err(argument(format!("truncation K = {k} must lie in 1..={MAX_TERMS}")));
    }
    Ok(())
}

/// Harmonic number `H_m`.
pub fn harmonic(m: usize) -> f64 {
    (1..=m).map(|k| 1.0 / k as f64).sum()
}

/// Partial sum `sum_{k <= K} k^-1 phi(2^k x, 2^{2k} (t - 1))`.
pub fn counterexample_value(x: &[f64], t: f64, k_max: usize) -> Result<f64> {
    check(x.len(), k_max)?;
    let rho = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let dt = (t - 1.0).abs();
    let mut y = 0.0;
    for k in 1..=k_max {
        let sx = rho * 2f64.powi(k as i32);
        let st = dt * 4f64.powi(k as i32);
        if sx >= 2.0 || st >= 2.0 {
            // Every later term has an even larger argument.
            break;
        }
        y += profile(sx).0 * profile(st).0 / k as f64;
    }
    Ok(y)
}

/// `u = y_t - Laplace y (+ y^3)` of the partial sum, from closed-form derivatives.
pub fn counterexample_control(x: &[f64], t: f64, k_max: usize, with_cubic: bool) -> Result<f64> {
    check(x.len(), k_max)?;
    let n = x.len();
    let rho = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let s = t - 1.0;
    let mut u = 0.0;
    for k in 1..=k_max {
        let scale = 4f64.powi(k as i32);
        let sx = rho * 2f64.powi(k as i32);
        let st = s * scale;
        if sx >= 2.0 || st.abs() >= 2.0 {
            break;
        }
        let ps1 = profile(st.abs()).1;
        let px = profile(sx).0;
        let phi_s = px * ps1 * st.signum();
        u += scale / k as f64 * (phi_s - bump_laplacian(sx, st, n));
    }
    if with_cubic {
        u += counterexample_value(x, t, k_max)?.powi(3);
    }
    Ok(u)
}

/// Which bump-derivative norm a series multiplies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesKind {
    /// `||y_t||^2`.
    Dt,
    /// `sum_ij ||d_ij y||^2`.
    Dxx,
}

/// The dimensionless factor `sum_{k <= K} k^-2 2^{k (2 - n)}`.
pub fn series_factor(k_max: usize, n: usize) -> Result<f64> {
    check(n, k_max)?;
    Ok((1..=k_max).map(|k| 2f64.powi(k as i32 * (2 - n as i32)) / (k * k) as f64).sum())
}

/// Partial sums of `||y_t||^2` or `sum_ij ||d_ij y||^2` over the first `K` terms.
pub fn counterexample_norm_series(k_max: usize, n: usize, which: SeriesKind) -> Result<f64> {
    let norms = bump_norms(n)?;
    let c = match which {
        SeriesKind::Dt => norms.dt,
        SeriesKind::Dxx => norms.dxx,
    };
    Ok(series_factor(k_max, n)? * c)
}

const SHELL_TOL: f64 = 1e-12;

/// Contribution of the `k`-th dyadic shell to `||u||^2_{L^2(Q)}`, computed in
/// the rescaled variables where the shell is `Q_{2,2} \ Q_{1,1}`.
fn shell_contribution(k: usize, n: usize, with_cubic: bool) -> f64 {
    let kf = k as f64;
    let lead = 4f64.powi(k as i32) / kf;
    let base = harmonic(k - 1);
    let jac = 2f64.powi(-(k as i32) * (n as i32 + 2));
    let area = sphere_area(n);
    let integrand = |rho: f64, s: f64| {
        let (ps, ps1, _) = profile(s.abs());
        let px = profile(rho).0;
        let d = px * ps1 * s.signum() - bump_laplacian(rho, s, n);
        let mut u = lead * d;
        if with_cubic {
            u += (base + px * ps / kf).powi(3);
        }
        jac * area * rho.powi(n as i32 - 1) * u * u
    };
    integrate_pieces(
        |s| {
            let breaks: &[f64] = if s.abs() < 1.0 { &[1.0, 2.0] } else { &[0.0, 1.0, 2.0] };
            integrate_pieces(|rho| integrand(rho, s), breaks, SHELL_TOL)
        },
        &[-2.0, -1.0, 1.0, 2.0],
        SHELL_TOL,
    )
}

/// `||u||^2_{L^2(Q)}` for the partial sum with `K` terms, for every `K` in
/// `1..=k_max`: shells `1..=K` plus the core cylinder where `y = H_K`.
pub fn control_norm_sq_series(k_max: usize, n: usize, with_cubic: bool) -> Result<Vec<f64>> {
    check(n, k_max)?;
    let ball = sphere_area(n) / n as f64;
    let mut shells = 0.0;
    let mut out = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        shells += shell_contribution(k, n, with_cubic);
        let core = if with_cubic {
            let r = 2f64.powi(-(k as i32));
            ball * r.powi(n as i32) * 2.0 * r * r * harmonic(k).powi(6)
        } else {
            0.0
        };
        out.push(shells + core);
    }
    Ok(out)
}

/// `||u||_{L^2(Q)}` for the partial sum with `K` terms.
pub fn counterexample_control_norm(k_max: usize, n: usize, with_cubic: bool) -> Result<f64> {
    Ok(control_norm_sq_series(k_max, n, with_cubic)?[k_max - 1].sqrt())
}

/// Minimum of the `K = m` partial sum over a deterministic lattice of
/// `samples` radii, directions and times inside `|x| < 2^-m`, `|t - 1| <= 2^-2m`.
pub fn min_on_cylinder(m: usize, n: usize, samples: usize) -> Result<f64> {
    check(n, m)?;
    if samples < 2 {
        return Err(argument("need at least 2 samples per axis"));
    }
    let r = 2f64.powi(-(m as i32));
    let tau = r * r;
    let mut min = f64::INFINITY;
    for i in 0..samples {
        // Radii up to (but excluding) the open boundary.
        let rho = r * i as f64 / samples as f64;
        for j in 0..samples {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / samples as f64;
            let x: Vec<f64> = match n {
                2 => vec![rho * theta.cos(), rho * theta.sin()],
                _ => vec![rho * theta.cos(), rho * theta.sin() * 0.6, rho * theta.sin() * 0.8],
            };
            for l in 0..samples {
                let t = 1.0 - tau + 2.0 * tau * l as f64 / (samples - 1) as f64;
                min = min.min(counterexample_value(&x, t, m)?);
            }
        }
    }
    Ok(min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn center_value_is_harmonic() {
        assert!((counterexample_value(&[0.0, 0.0], 1.0, 3).unwrap() - 11.0 / 6.0).abs() < 1e-15);
        assert_eq!(counterexample_value(&[2.0, 0.0], 1.0, 5).unwrap(), 0.0);
        assert_eq!(counterexample_control(&[0.0, 2.5, 0.0], 1.0, 5, true).unwrap(), 0.0);
        assert!(counterexample_value(&[0.0], 1.0, 3).is_err());
    }

    #[test]
    fn series_factors() {
        assert!((series_factor(3, 2).unwrap() - 49.0 / 36.0).abs() < 1e-15);
        assert!((series_factor(3, 3).unwrap() - (0.5 + 1.0 / 16.0 + 1.0 / 72.0)).abs() < 1e-15);
        assert_eq!(series_factor(1, 2).unwrap(), 1.0);
    }

    #[test]
    fn monotone_in_truncation() {
        for &(x, t) in &[([0.01, 0.02], 1.0001), ([0.3, 0.0], 1.01), ([0.0, 0.0], 1.0)] {
            let mut prev = 0.0;
            for k in 1..12 {
                let v = counterexample_value(&x, t, k).unwrap();
                assert!(v >= prev);
                prev = v;
            }
        }
    }

    #[test]
    fn lattice_minimum_reaches_harmonic_number() {
        for m in 1..=4 {
            assert!(min_on_cylinder(m, 2, 6).unwrap() >= harmonic(m) - 1e-12);
        }
    }
}

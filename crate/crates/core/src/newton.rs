//! Damped Newton iteration for `M z + F(z) = b` with a diagonal nonlinearity `F`.

use crate::error::{Error, Result};
use crate::sparse::{BandedLu, CsrMatrix};
use crate::SolveOptions;

const MAX_HALVINGS: usize = 30;

pub(crate) struct DiagonalSystem<'a, V, D>
where
    V: Fn(usize, f64) -> f64,
    D: Fn(usize, f64) -> f64,
{
    pub matrix: &'a CsrMatrix,
    pub rhs: &'a [f64],
    /// Pointwise nonlinear term `F_i(z_i)`.
    pub value: V,
    /// Its derivative.
    pub derivative: D,
    /// Converts residual entries to nodal units before taking norms.
    pub residual_scale: &'a [f64],
}

impl<V, D> DiagonalSystem<'_, V, D>
where
    V: Fn(usize, f64) -> f64,
    D: Fn(usize, f64) -> f64,
{
    fn residual(&self, z: &[f64]) -> Vec<f64> {
        let mut r = self.matrix.mul_vec(z);
        for i in 0..r.len() {
            r[i] += (self.value)(i, z[i]) - self.rhs[i];
        }
        r
    }

    fn max_norm(&self, r: &[f64]) -> f64 {
        r.iter().zip(self.residual_scale).fold(0.0, |m, (v, s)| m.max((v * s).abs()))
    }

    fn merit(&self, r: &[f64]) -> f64 {
        r.iter().zip(self.residual_scale).map(|(v, s)| (v * s) * (v * s)).sum::<f64>().sqrt()
    }

    fn newton_step(&self, z: &[f64], r: &[f64], opts: &SolveOptions) -> Result<Vec<f64>> {
        let shift: Vec<f64> = z.iter().enumerate().map(|(i, zi)| (self.derivative)(i, *zi)).collect();
        let lu = BandedLu::factor(self.matrix, &shift)?;
        let delta = solve_refined(self.matrix, &shift, &lu, r, opts.linear_tol)?;
        Ok(delta)
    }

    /// Solves from `initial`; `stage` and `step` label divergence errors.
    pub fn solve(&self, initial: Vec<f64>, opts: &SolveOptions, stage: &'static str, step: usize) -> Result<Vec<f64>> {
        let rhs_scale = 1.0 + self.max_norm(self.rhs);
        let tol = opts.newton_tol * rhs_scale;
        let mut z = initial;
        let mut r = self.residual(&z);
        let mut res = self.max_norm(&r);
        let diverged = |residual: f64| Error::Divergence { stage, step, residual };
        for _ in 0..opts.max_newton {
            if !res.is_finite() {
                return Err(diverged(res));
            }
            let converged = res <= tol;
            let delta = self.newton_step(&z, &r, opts)?;
            let merit0 = self.merit(&r);
            let mut s = 1.0;
            let mut accepted = None;
            for _ in 0..=MAX_HALVINGS {
                let trial: Vec<f64> = z.iter().zip(&delta).map(|(a, d)| a - s * d).collect();
                let rt = self.residual(&trial);
                let mt = self.merit(&rt);
                if mt.is_finite() && (mt <= (1.0 - 1e-4 * s) * merit0 || (converged && mt <= merit0)) {
                    accepted = Some((trial, rt));
                    break;
                }
                s *= 0.5;
            }
            match accepted {
                Some((trial, rt)) => {
                    z = trial;
                    r = rt;
                    res = self.max_norm(&r);
                }
                // A converged iterate that cannot be polished further is final.
                None if converged => return Ok(z),
                None => return Err(diverged(res)),
            }
            // One polishing step past the tolerance keeps discrete derivatives exact.
            if converged {
                return Ok(z);
            }
        }
        if res <= tol {
            Ok(z)
        } else {
            Err(diverged(res))
        }
    }
}

/// Direct solve followed by iterative refinement until the normwise backward
/// error `||b - A x|| / (||A|| ||x|| + ||b||)` is below `tol`.
pub(crate) fn solve_refined(matrix: &CsrMatrix, shift: &[f64], lu: &BandedLu, b: &[f64], tol: f64) -> Result<Vec<f64>> {
    refine(matrix, shift, b, tol, |r| lu.solve(r))
}

/// Transposed counterpart of [`solve_refined`]; `matrix_t` is the transpose.
pub(crate) fn solve_transpose_refined(
    matrix_t: &CsrMatrix,
    shift: &[f64],
    lu: &BandedLu,
    b: &[f64],
    tol: f64,
) -> Result<Vec<f64>> {
    refine(matrix_t, shift, b, tol, |r| lu.solve_transpose(r))
}

fn refine(matrix: &CsrMatrix, shift: &[f64], b: &[f64], tol: f64, solve: impl Fn(&[f64]) -> Vec<f64>) -> Result<Vec<f64>> {
    let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let norm_a = (0..matrix.dim())
        .map(|i| matrix.row(i).map(|(_, v)| v.abs()).sum::<f64>() + shift.get(i).map_or(0.0, |s| s.abs()))
        .fold(0.0f64, f64::max);
    let mut x = solve(b);
    let mut last = f64::NAN;
    for _ in 0..4 {
        let ax = matrix.mul_vec(&x);
        let r: Vec<f64> = (0..x.len()).map(|i| b[i] - ax[i] - shift.get(i).copied().unwrap_or(0.0) * x[i]).collect();
        let denom = norm_a * inf(&x) + inf(b);
        last = if denom > 0.0 { inf(&r) / denom } else { 0.0 };
        if !last.is_finite() {
            break;
        }
        if last <= tol {
            return Ok(x);
        }
        let dx = solve(&r);
        for i in 0..x.len() {
            x[i] += dx[i];
        }
    }
    Err(Error::LinearSolve(format!("backward error {last:e} above linear_tol = {tol:e}")))
}

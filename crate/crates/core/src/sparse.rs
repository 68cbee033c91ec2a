//! Compressed sparse rows and a banded LU factorization.
//!
//! All system matrices here come from lexicographically numbered tensor grids,
//! so their bandwidth is bounded by one grid plane and a banded factorization
//! without pivoting (the matrices are symmetric positive definite or
//! M-matrices) is exact and cheap.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a square matrix, summing duplicate entries.
    pub fn from_triplets(n: usize, mut entries: Vec<(usize, usize, f64)>) -> Self {
        entries.sort_by_key(|e| (e.0, e.1));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::with_capacity(entries.len());
        let mut vals: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            debug_assert!(r < n && c < n);
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, (0..n).map(|i| (i, i, 1.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|(c, _)| *c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Vec::with_capacity(self.vals.len());
        for i in 0..self.n {
            t.extend(self.row(i).map(|(j, v)| (j, i, v)));
        }
        Self::from_triplets(self.n, t)
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f64, other: &Self, beta: f64) -> Self {
        assert_eq!(self.n, other.n);
        let mut t = Vec::with_capacity(self.vals.len() + other.vals.len());
        for i in 0..self.n {
            t.extend(self.row(i).map(|(j, v)| (i, j, alpha * v)));
            t.extend(other.row(i).map(|(j, v)| (i, j, beta * v)));
        }
        Self::from_triplets(self.n, t)
    }

    /// Left-multiplies by `diag(d)`.
    pub fn scale_rows(&self, d: &[f64]) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.vals[k] *= d[i];
            }
        }
        out
    }

    /// Principal submatrix on the listed indices (in the given order).
    pub fn submatrix(&self, keep: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let mut t = Vec::new();
        for (new_i, &old_i) in keep.iter().enumerate() {
            for (j, v) in self.row(old_i) {
                if map[j] != usize::MAX {
                    t.push((new_i, map[j], v));
                }
            }
        }
        Self::from_triplets(keep.len(), t)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let t = self.transpose();
        (0..self.n).all(|i| self.row(i).all(|(j, v)| (t.get(i, j) - v).abs() <= tol * (1.0 + v.abs())))
    }

    fn bandwidths(&self) -> (usize, usize) {
        let mut lower = 0;
        let mut upper = 0;
        for i in 0..self.n {
            for (j, _) in self.row(i) {
                if j < i {
                    lower = lower.max(i - j);
                } else {
                    upper = upper.max(j - i);
                }
            }
        }
        (lower, upper)
    }
}

/// Banded LU factors of a square matrix, stored row-wise over the band.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    lower: usize,
    upper: usize,
    width: usize,
    band: Vec<f64>,
}

impl BandedLu {
    /// Factors `matrix + diag(shift)`; `shift` may be empty.
    pub fn factor(matrix: &CsrMatrix, shift: &[f64]) -> Result<Self> {
        let n = matrix.n;
        let (lower, upper) = matrix.bandwidths();
        let width = lower + upper + 1;
        let mut band = vec![0.0; n * width];
        for i in 0..n {
            for (j, v) in matrix.row(i) {
                band[i * width + (j + lower - i)] += v;
            }
            if let Some(s) = shift.get(i) {
                band[i * width + lower] += s;
            }
        }
        let mut lu = Self { n, lower, upper, width, band };
        lu.eliminate()?;
        Ok(lu)
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.lower - i)
    }

    fn eliminate(&mut self) -> Result<()> {
        let scale = self.band.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        for k in 0..self.n {
            let pivot = self.band[self.at(k, k)];
            if !(pivot.abs() > 1e-300 * scale) || !pivot.is_finite() {
                return Err(Error::LinearSolve(format!("zero or non-finite pivot {pivot:e} in row {k}")));
            }
            let row_end = (k + self.upper).min(self.n - 1);
            for i in k + 1..=(k + self.lower).min(self.n - 1) {
                let lik_idx = self.at(i, k);
                let lik = self.band[lik_idx] / pivot;
                if lik == 0.0 {
                    continue;
                }
                self.band[lik_idx] = lik;
                let (src, dst) = (self.at(k, k + 1), self.at(i, k + 1));
                let len = row_end - k;
                for off in 0..len {
                    self.band[dst + off] -= lik * self.band[src + off];
                }
            }
        }
        Ok(())
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        for i in 0..self.n {
            let lo = i.saturating_sub(self.lower);
            let mut s = x[i];
            for j in lo..i {
                s -= self.band[self.at(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..self.n).rev() {
            let hi = (i + self.upper).min(self.n - 1);
            let mut s = x[i];
            for j in i + 1..=hi {
                s -= self.band[self.at(i, j)] * x[j];
            }
            x[i] = s / self.band[self.at(i, i)];
        }
        x
    }

    /// Solves with the transposed matrix using the same factors.
    pub fn solve_transpose(&self, rhs: &[f64]) -> Vec<f64> {
        // (LU)^T x = U^T L^T x = b: forward with U^T, backward with L^T.
        let mut x = rhs.to_vec();
        for i in 0..self.n {
            let lo = i.saturating_sub(self.upper);
            let mut s = x[i];
            for j in lo..i {
                s -= self.band[self.at(j, i)] * x[j];
            }
            x[i] = s / self.band[self.at(i, i)];
        }
        for i in (0..self.n).rev() {
            let hi = (i + self.lower).min(self.n - 1);
            let mut s = x[i];
            for j in i + 1..=hi {
                s -= self.band[self.at(j, i)] * x[j];
            }
            x[i] = s;
        }
        x
    }
}

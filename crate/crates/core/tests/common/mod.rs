//! Fixtures and dense reference solvers shared by the integration tests.
//!
//! The oracles here never call the library's assembly or solvers: stencils,
//! quadrature weights and time stepping are coded again from scratch on dense
//! nalgebra matrices.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semicontrol::elliptic::EllipticProblem;
use semicontrol::parabolic::ParabolicProblem;
use semicontrol::{
    BoundaryField, EllipticCoefficients, Field, GridSpec, Nonlinearity, SpaceTimeField, SpatialField,
    SpatialNonlinearity,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_values(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

/// Heat-type fixture on `(0,1)^dim x (0,T)` with `y0 = 0` and a smooth target.
pub fn heat_fixture(dim: usize, nx: usize, nt: usize, f: Nonlinearity, alpha: f64) -> ParabolicProblem {
    let g = GridSpec::unit(dim, nx).unwrap().with_time(nt, 0.5).unwrap();
    let s = g.spatial_only();
    let yd = SpaceTimeField::from_fn(g, |x, t| {
        let mut v = 1.0 + t;
        for xi in &x[..dim] {
            v *= 2.0 * (std::f64::consts::PI * xi).sin();
        }
        v
    })
    .unwrap();
    ParabolicProblem::new(g, EllipticCoefficients::laplacian(s, 0.0).unwrap(), f, SpatialField::zeros(s), yd, alpha)
        .unwrap()
}

/// Neumann fixture on the unit square with `a = I`, `a_0 = 1`.
pub fn neumann_fixture(nx: usize, f: Nonlinearity, alpha: f64) -> EllipticProblem {
    let g = GridSpec::unit(2, nx).unwrap();
    EllipticProblem::new(
        g,
        EllipticCoefficients::laplacian(g, 1.0).unwrap(),
        SpatialNonlinearity::uniform(f, g),
        SpatialField::from_fn(g, |x| 1.0 + x[0]).unwrap(),
        SpatialField::from_fn(g, |x| 2.0 + x[0] * x[1] - x[1]).unwrap(),
        alpha,
    )
    .unwrap()
}

/// Trapezoid weights on a uniform tensor grid, recomputed independently.
pub fn trapezoid(dim: usize, nx: usize) -> Vec<f64> {
    let h = 1.0 / (nx - 1) as f64;
    let w1: Vec<f64> = (0..nx).map(|i| if i == 0 || i == nx - 1 { 0.5 * h } else { h }).collect();
    let total = nx.pow(dim as u32);
    (0..total)
        .map(|mut k| {
            let mut w = 1.0;
            for _ in 0..dim {
                w *= w1[k % nx];
                k /= nx;
            }
            w
        })
        .collect()
}

/// Dense `-Laplace_h` with homogeneous Dirichlet data on the interior of the
/// unit cube grid, in lexicographic order of interior nodes.
pub fn dense_dirichlet_laplacian(dim: usize, nx: usize) -> (DMatrix<f64>, Vec<usize>) {
    let h = 1.0 / (nx - 1) as f64;
    let total = nx.pow(dim as u32);
    let multi = |mut k: usize| {
        let mut m = vec![0; dim];
        for a in (0..dim).rev() {
            m[a] = k % nx;
            k /= nx;
        }
        m
    };
    let interior: Vec<usize> = (0..total).filter(|&k| multi(k).iter().all(|&i| i > 0 && i < nx - 1)).collect();
    let pos = |k: usize| interior.iter().position(|&j| j == k);
    let n = interior.len();
    let mut a = DMatrix::zeros(n, n);
    for (r, &k) in interior.iter().enumerate() {
        a[(r, r)] = 2.0 * dim as f64 / (h * h);
        for axis in 0..dim {
            let stride = nx.pow((dim - 1 - axis) as u32);
            for nb in [k - stride, k + stride] {
                if let Some(c) = pos(nb) {
                    a[(r, c)] = -1.0 / (h * h);
                }
            }
        }
    }
    (a, interior)
}

/// Dense implicit-Euler solver for `y_t - Laplace y + c y^3 = u` with `y0 = 0`,
/// full-grid in/out (time-major), using a plain Newton iteration.
pub struct DenseHeat {
    pub dim: usize,
    pub nx: usize,
    pub nt: usize,
    pub tau: f64,
    pub c: f64,
    pub lap: DMatrix<f64>,
    pub interior: Vec<usize>,
}

impl DenseHeat {
    pub fn new(dim: usize, nx: usize, nt: usize, final_time: f64, c: f64) -> Self {
        let (lap, interior) = dense_dirichlet_laplacian(dim, nx);
        Self { dim, nx, nt, tau: final_time / nt as f64, c, lap, interior }
    }

    pub fn nodes(&self) -> usize {
        self.nx.pow(self.dim as u32)
    }

    fn step_matrix(&self) -> DMatrix<f64> {
        DMatrix::identity(self.interior.len(), self.interior.len()) + &self.lap * self.tau
    }

    pub fn state(&self, u: &[f64]) -> Vec<f64> {
        let n = self.nodes();
        let m = self.interior.len();
        let base = self.step_matrix();
        let mut out = vec![0.0; (self.nt + 1) * n];
        let mut prev = DVector::zeros(m);
        for step in 1..=self.nt {
            let rhs = DVector::from_fn(m, |i, _| prev[i] + self.tau * u[step * n + self.interior[i]]);
            let mut y = prev.clone();
            for _ in 0..100 {
                let r = &base * &y + y.map(|v| self.tau * self.c * v * v * v) - &rhs;
                let mut jac = base.clone();
                for i in 0..m {
                    jac[(i, i)] += 3.0 * self.tau * self.c * y[i] * y[i];
                }
                let d = jac.lu().solve(&r).unwrap();
                y -= &d;
                if d.amax() <= 1e-15 * (1.0 + y.amax()) {
                    break;
                }
            }
            for i in 0..m {
                out[step * n + self.interior[i]] = y[i];
            }
            prev = y;
        }
        out
    }

    /// Backward adjoint with source `src`, linearized at the state `y`.
    pub fn adjoint(&self, y: &[f64], src: &[f64]) -> Vec<f64> {
        let n = self.nodes();
        let m = self.interior.len();
        let base = self.step_matrix();
        let mut out = vec![0.0; (self.nt + 1) * n];
        let mut next = DVector::zeros(m);
        for step in (1..=self.nt).rev() {
            let mut g = base.clone();
            for i in 0..m {
                let yi = y[step * n + self.interior[i]];
                g[(i, i)] += 3.0 * self.tau * self.c * yi * yi;
            }
            let rhs = DVector::from_fn(m, |i, _| next[i] + self.tau * src[step * n + self.interior[i]]);
            let phi = g.transpose().lu().solve(&rhs).unwrap();
            for i in 0..m {
                out[step * n + self.interior[i]] = phi[i];
            }
            next = phi;
        }
        out
    }

    /// Space-time weights `tau W` with zero weight on the initial level.
    pub fn weights(&self) -> Vec<f64> {
        let w = trapezoid(self.dim, self.nx);
        let mut out = vec![0.0; w.len()];
        for _ in 0..self.nt {
            out.extend(w.iter().map(|v| self.tau * v));
        }
        out
    }
}

/// Dense Neumann problem `-Laplace y + y = g` with `d_nu y = u`, assembled by
/// ghost-node elimination as a nodal (nonsymmetric) finite-difference matrix.
pub struct DenseNeumann {
    pub nx: usize,
    pub h: f64,
    pub matrix: DMatrix<f64>,
    pub boundary: Vec<usize>,
    /// Nodal load per unit boundary control, `2/h` per face the node lies on.
    pub load: DMatrix<f64>,
}

impl DenseNeumann {
    pub fn new(nx: usize) -> Self {
        let h = 1.0 / (nx - 1) as f64;
        let n = nx * nx;
        let mut a = DMatrix::zeros(n, n);
        let idx = |i: usize, j: usize| i * nx + j;
        let boundary: Vec<usize> = (0..n).filter(|k| {
            let (i, j) = (k / nx, k % nx);
            i == 0 || j == 0 || i == nx - 1 || j == nx - 1
        }).collect();
        let mut load = DMatrix::zeros(n, boundary.len());
        for i in 0..nx {
            for j in 0..nx {
                let k = idx(i, j);
                a[(k, k)] = 4.0 / (h * h) + 1.0;
                // Each missing neighbour is a ghost mirrored onto the opposite neighbour.
                for (di, dj) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                    let (ni, nj) = (i as i64 + di, j as i64 + dj);
                    let inside = |v: i64| v >= 0 && v < nx as i64;
                    let (ti, tj) = if inside(ni) && inside(nj) { (ni, nj) } else { (i as i64 - di, j as i64 - dj) };
                    a[(k, idx(ti as usize, tj as usize))] -= 1.0 / (h * h);
                    if !(inside(ni) && inside(nj)) {
                        let b = boundary.iter().position(|&q| q == k).unwrap();
                        load[(k, b)] += 2.0 / h;
                    }
                }
            }
        }
        Self { nx, h, matrix: a, boundary, load }
    }

    pub fn solve(&self, g: &[f64], u: &[f64]) -> Vec<f64> {
        let rhs = DVector::from_column_slice(g) + &self.load * DVector::from_column_slice(u);
        self.matrix.clone().lu().solve(&rhs).unwrap().as_slice().to_vec()
    }

    /// Newton solve of `M y + c y^3 = g + L u`.
    pub fn solve_cubic(&self, g: &[f64], u: &[f64], c: f64) -> Vec<f64> {
        let rhs = DVector::from_column_slice(g) + &self.load * DVector::from_column_slice(u);
        let mut y = DVector::zeros(rhs.len());
        for _ in 0..100 {
            let r = &self.matrix * &y + y.map(|v| c * v * v * v) - &rhs;
            let mut jac = self.matrix.clone();
            for i in 0..y.len() {
                jac[(i, i)] += 3.0 * c * y[i] * y[i];
            }
            let d = jac.lu().solve(&r).unwrap();
            y -= &d;
            if d.amax() <= 1e-15 * (1.0 + y.amax()) {
                break;
            }
        }
        y.as_slice().to_vec()
    }

    /// Adjoint for the trapezoid inner product. The ghost-node matrix is
    /// self-adjoint in that inner product, so this is the nodal linearization.
    pub fn adjoint(&self, y: &[f64], source: &[f64], c: f64) -> Vec<f64> {
        let mut jac = self.matrix.clone();
        for i in 0..y.len() {
            jac[(i, i)] += 3.0 * c * y[i] * y[i];
        }
        jac.lu().solve(&DVector::from_column_slice(source)).unwrap().as_slice().to_vec()
    }

    /// Boundary quadrature weights: `h` at every boundary node of the square
    /// (a corner collects half an edge from each of its two faces).
    pub fn boundary_weights(&self) -> Vec<f64> {
        vec![self.h; self.boundary.len()]
    }
}

/// Solves `min 1/2 x^T H x - b^T x` subject to `|x_i| <= m` for symmetric
/// positive definite `H` by a primal-dual active set iteration.
pub fn box_qp(h: &DMatrix<f64>, b: &DVector<f64>, m: f64) -> DVector<f64> {
    let n = b.len();
    let mut x = h.clone().lu().solve(b).unwrap();
    let mut lambda = DVector::zeros(n);
    let mut state = vec![0i8; n];
    for _ in 0..200 {
        let mut next = vec![0i8; n];
        for i in 0..n {
            if x[i] + lambda[i] > m {
                next[i] = 1;
            } else if x[i] + lambda[i] < -m {
                next[i] = -1;
            }
        }
        if next == state && x.iter().all(|v| v.abs() <= m * (1.0 + 1e-12)) {
            break;
        }
        state = next;
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 0).collect();
        let mut xn = DVector::zeros(n);
        for i in 0..n {
            if state[i] != 0 {
                xn[i] = m * state[i] as f64;
            }
        }
        if !free.is_empty() {
            let hf = DMatrix::from_fn(free.len(), free.len(), |r, c| h[(free[r], free[c])]);
            let rhs = DVector::from_fn(free.len(), |r, _| {
                b[free[r]] - (0..n).filter(|&j| state[j] != 0).map(|j| h[(free[r], j)] * xn[j]).sum::<f64>()
            });
            let xf = hf.lu().solve(&rhs).unwrap();
            for (r, &i) in free.iter().enumerate() {
                xn[i] = xf[r];
            }
        }
        let grad = h * &xn - b;
        lambda = DVector::from_fn(n, |i, _| if state[i] == 0 { 0.0 } else { -grad[i] });
        x = xn;
    }
    x
}

pub fn weighted_norm(v: &[f64], w: &[f64]) -> f64 {
    v.iter().zip(w).map(|(a, w)| w * a * a).sum::<f64>().sqrt()
}

pub fn weighted_dot(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    a.iter().zip(b).zip(w).map(|((x, y), w)| w * x * y).sum()
}

pub fn boundary_field(grid: GridSpec, values: Vec<f64>) -> BoundaryField {
    BoundaryField::new(grid, values).unwrap()
}

pub fn space_time(grid: GridSpec, values: Vec<f64>) -> SpaceTimeField {
    SpaceTimeField::new(grid, values).unwrap()
}

pub fn values<F: Field>(f: &F) -> Vec<f64> {
    f.values().to_vec()
}

/// Prints one acceptance line and fails the test on a miss.
pub fn verdict(id: &str, name: &str, pass: bool, detail: impl AsRef<str>) {
    println!("criterion {id:<4} {:<4} {name}: {}", if pass { "PASS" } else { "FAIL" }, detail.as_ref());
    assert!(pass, "criterion {id} ({name}) failed: {}", detail.as_ref());
}

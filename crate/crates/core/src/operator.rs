//! Finite-difference assembly of the elliptic operator.
//!
//! The operator is assembled as a stiffness matrix `K` representing the
//! discrete bilinear form
//!
//! ```text
//! B_h(y, z) = sum_i sum_{edges along i} c_e a_e (y_q - y_p)(z_q - z_p)
//!           + sum_{i != j} sum_cells |cell| a_ij G_i(y) G_j(z)
//!           + sum_nodes W_p a_0(p) y_p z_p
//! ```
//!
//! with trapezoid node weights `W`, edge weights `c_e` equal to the transverse
//! trapezoid weights divided by the edge length, and cell-averaged difference
//! quotients `G_i` for the off-diagonal diffusion. On interior nodes `W^-1 K` is
//! the classical centered stencil; on boundary nodes it coincides with the
//! ghost-node elimination of a homogeneous conormal condition, so Neumann
//! data enters only through the load vector.

use crate::coefficients::{Diffusion, EllipticCoefficients};
use crate::error::{argument, Result};
use crate::field::{Field, SpatialField};
use crate::grid::GridSpec;
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCondition {
    /// Homogeneous Dirichlet: boundary nodes are eliminated.
    Dirichlet,
    /// Conormal derivative condition: every node is an unknown.
    Neumann,
}

/// `A_h = W^-1 K` restricted to the active nodes, together with its pieces.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    grid: GridSpec,
    bc: BoundaryCondition,
    active: Vec<usize>,
    weights: Vec<f64>,
    stiffness: CsrMatrix,
    matrix: CsrMatrix,
}

impl DiscreteOperator {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn boundary_condition(&self) -> BoundaryCondition {
        self.bc
    }

    /// Global node index of every unknown.
    pub fn active_nodes(&self) -> &[usize] {
        &self.active
    }

    /// Trapezoid weights of the unknowns.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Stiffness `K` on the unknowns.
    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    /// Nodal operator `W^-1 K` on the unknowns.
    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    /// Applies `A_h` to a full nodal vector; entries at eliminated nodes are ignored
    /// on input and returned as zero.
    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        let local: Vec<f64> = self.active.iter().map(|&i| values[i]).collect();
        let out = self.matrix.mul_vec(&local);
        let mut full = vec![0.0; self.grid.node_count()];
        for (k, &i) in self.active.iter().enumerate() {
            full[i] = out[k];
        }
        full
    }

    pub fn gather(&self, values: &[f64]) -> Vec<f64> {
        self.active.iter().map(|&i| values[i]).collect()
    }

    pub fn scatter(&self, local: &[f64], full: &mut [f64]) {
        for (k, &i) in self.active.iter().enumerate() {
            full[i] = local[k];
        }
    }
}

/// Full-grid stiffness matrix `K` of the bilinear form above.
pub fn assemble_stiffness(coeffs: &EllipticCoefficients) -> CsrMatrix {
    let grid = *coeffs.grid();
    let n = grid.dim();
    let nodes = grid.node_count();
    let weights = grid.trapezoid_weights();
    let mut t: Vec<(usize, usize, f64)> = Vec::with_capacity(nodes * (2 * n + 1) * 2);

    for axis in 0..n {
        let h = grid.spacing(axis);
        let stride = grid.stride(axis);
        for p in 0..nodes {
            let mi = grid.multi_index(p);
            if mi[axis] + 1 == grid.nodes_along(axis) {
                continue;
            }
            let q = p + stride;
            let transverse: f64 =
                (0..n).filter(|&b| b != axis).map(|b| grid.axis_weight(b, mi[b])).product();
            let a_e = match coeffs.diffusion() {
                Diffusion::Constant(a) => a[axis][axis],
                Diffusion::Isotropic(a) => 0.5 * (a.values()[p] + a.values()[q]),
            };
            let c = a_e * transverse / h;
            t.extend([(p, p, c), (q, q, c), (p, q, -c), (q, p, -c)]);
        }
    }

    if let Diffusion::Constant(a) = coeffs.diffusion() {
        let off_diagonal = (0..n).any(|i| (0..n).any(|j| i != j && a[i][j] != 0.0));
        if off_diagonal {
            assemble_cross_terms(&grid, a, &mut t);
        }
    }

    for (p, (w, a0)) in weights.iter().zip(coeffs.reaction().values()).enumerate() {
        if *a0 != 0.0 {
            t.push((p, p, w * a0));
        }
    }
    CsrMatrix::from_triplets(nodes, t)
}

fn assemble_cross_terms(grid: &GridSpec, a: &[[f64; 3]; 3], t: &mut Vec<(usize, usize, f64)>) {
    let n = grid.dim();
    let corners = 1usize << n;
    let volume: f64 = (0..n).map(|i| grid.spacing(i)).product();
    let edge_share = 1.0 / (1usize << (n - 1)) as f64;
    for base in 0..grid.node_count() {
        let mi = grid.multi_index(base);
        if (0..n).any(|i| mi[i] + 1 == grid.nodes_along(i)) {
            continue;
        }
        // grads[i][c]: coefficient of corner c in the cell-averaged difference along i.
        let mut idx = vec![0usize; corners];
        let mut grads = vec![vec![0.0; corners]; n];
        for c in 0..corners {
            let mut m = mi;
            for i in 0..n {
                if c >> i & 1 == 1 {
                    m[i] += 1;
                }
            }
            idx[c] = grid.linear_index(m);
            for i in 0..n {
                let sign = if c >> i & 1 == 1 { 1.0 } else { -1.0 };
                grads[i][c] = sign * edge_share / grid.spacing(i);
            }
        }
        for i in 0..n {
            for j in 0..n {
                if i == j || a[i][j] == 0.0 {
                    continue;
                }
                let s = volume * a[i][j];
                for ca in 0..corners {
                    for cb in 0..corners {
                        let v = s * grads[i][ca] * grads[j][cb];
                        if v != 0.0 {
                            t.push((idx[ca], idx[cb], v));
                        }
                    }
                }
            }
        }
    }
}

/// Assembles `A_h` for the given boundary condition.
pub fn assemble_operator(coeffs: &EllipticCoefficients, bc: BoundaryCondition) -> DiscreteOperator {
    let grid = *coeffs.grid();
    let full = assemble_stiffness(coeffs);
    let all_weights = grid.trapezoid_weights();
    let active: Vec<usize> = match bc {
        BoundaryCondition::Dirichlet => grid.interior_nodes(),
        BoundaryCondition::Neumann => (0..grid.node_count()).collect(),
    };
    let stiffness = full.submatrix(&active);
    let weights: Vec<f64> = active.iter().map(|&i| all_weights[i]).collect();
    let inv: Vec<f64> = weights.iter().map(|w| 1.0 / w).collect();
    let matrix = stiffness.scale_rows(&inv);
    DiscreteOperator { grid, bc, active, weights, stiffness, matrix }
}

/// Discrete bilinear form `B_h(y, z) = z^T K y` on the full grid.
pub fn bilinear_form(y: &SpatialField, z: &SpatialField, coeffs: &EllipticCoefficients) -> Result<f64> {
    if y.grid() != coeffs.grid() || z.grid() != coeffs.grid() {
        return Err(argument("bilinear form arguments live on a different grid than the coefficients"));
    }
    let k = assemble_stiffness(coeffs);
    Ok(k.mul_vec(y.values()).iter().zip(z.values()).map(|(a, b)| a * b).sum())
}

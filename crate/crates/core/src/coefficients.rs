//! Coefficients of the second-order operator
//! `Ay = -sum_ij d_j(a_ij d_i y) + a_0 y`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{argument, validation, Result};
use crate::field::{Field, SpatialField};
use crate::grid::GridSpec;

#[derive(Debug, Clone, PartialEq)]
pub enum Diffusion {
    /// Constant symmetric matrix, row-major, `dim x dim` entries used.
    Constant([[f64; 3]; 3]),
    /// `a(x) I` with nodal values.
    Isotropic(SpatialField),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EllipticCoefficients {
    grid: GridSpec,
    diffusion: Diffusion,
    reaction: SpatialField,
    lambda_a: f64,
}

impl EllipticCoefficients {
    pub fn new(grid: GridSpec, diffusion: Diffusion, reaction: SpatialField) -> Result<Self> {
        let grid = grid.spatial_only();
        if reaction.grid() != &grid {
            return Err(argument("reaction coefficient a_0 lives on a different grid"));
        }
        if let Some(i) = reaction.values().iter().position(|v| *v < 0.0) {
            return Err(validation(format!("a_0 >= 0 violated at node {i}")));
        }
        let n = grid.dim();
        let lambda_a = match &diffusion {
            Diffusion::Constant(a) => {
                for i in 0..n {
                    for j in 0..n {
                        if !a[i][j].is_finite() || a[i][j] != a[j][i] {
                            return Err(validation(format!("diffusion matrix not symmetric at ({i},{j})")));
                        }
                    }
                }
                let m = DMatrix::from_fn(n, n, |i, j| a[i][j]);
                SymmetricEigen::new(m).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
            }
            Diffusion::Isotropic(a) => {
                if a.grid() != &grid {
                    return Err(argument("diffusion field lives on a different grid"));
                }
                a.values().iter().copied().fold(f64::INFINITY, f64::min)
            }
        };
        if !(lambda_a > 0.0) {
            return Err(validation(format!("ellipticity violated: Lambda_A = {lambda_a} is not positive")));
        }
        Ok(Self { grid, diffusion, reaction, lambda_a })
    }

    /// `a = I`, `a_0 = reaction`.
    pub fn laplacian(grid: GridSpec, reaction: f64) -> Result<Self> {
        let g = grid.spatial_only();
        Self::new(g, Diffusion::Constant(identity()), SpatialField::constant(g, reaction))
    }

    pub fn diagonal(grid: GridSpec, diag: &[f64], reaction: f64) -> Result<Self> {
        let g = grid.spatial_only();
        if diag.len() != g.dim() {
            return Err(argument(format!("expected {} diagonal entries", g.dim())));
        }
        let mut a = identity();
        for (i, d) in diag.iter().enumerate() {
            a[i][i] = *d;
        }
        Self::new(g, Diffusion::Constant(a), SpatialField::constant(g, reaction))
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn diffusion(&self) -> &Diffusion {
        &self.diffusion
    }

    pub fn reaction(&self) -> &SpatialField {
        &self.reaction
    }

    pub fn lambda_a(&self) -> f64 {
        self.lambda_a
    }

    pub fn reaction_vanishes(&self) -> bool {
        self.reaction.values().iter().all(|v| *v == 0.0)
    }
}

fn identity() -> [[f64; 3]; 3] {
    [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ellipticity_constant() {
        let g = GridSpec::unit(2, 4).unwrap();
        let a = [[2.0, 1.0, 0.0], [1.0, 2.0, 0.0], [0.0, 0.0, 0.0]];
        let c = EllipticCoefficients::new(g, Diffusion::Constant(a), SpatialField::zeros(g)).unwrap();
        assert!((c.lambda_a() - 1.0).abs() < 1e-12);
        let bad = [[1.0, 2.0, 0.0], [2.0, 1.0, 0.0], [0.0, 0.0, 0.0]];
        assert!(EllipticCoefficients::new(g, Diffusion::Constant(bad), SpatialField::zeros(g)).is_err());
        let asym = [[1.0, 0.2, 0.0], [0.1, 1.0, 0.0], [0.0, 0.0, 0.0]];
        assert!(EllipticCoefficients::new(g, Diffusion::Constant(asym), SpatialField::zeros(g)).is_err());
    }

    #[test]
    fn sampled_sphere_respects_lambda_a() {
        let g = GridSpec::unit(3, 3).unwrap();
        let a = [[3.0, 0.5, 0.2], [0.5, 2.0, -0.3], [0.2, -0.3, 1.5]];
        let c = EllipticCoefficients::new(g, Diffusion::Constant(a), SpatialField::zeros(g)).unwrap();
        for i in 0..200 {
            let th = i as f64 * 0.37;
            let ph = i as f64 * 0.11;
            let xi = [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()];
            let q: f64 = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| a[i][j] * xi[i] * xi[j]).sum();
            assert!(q >= c.lambda_a() - 1e-12);
        }
    }

    #[test]
    fn negative_reaction_or_diffusion_rejected() {
        let g = GridSpec::unit(1, 4).unwrap();
        let neg = SpatialField::new(g, vec![0.0, -1.0, 0.0, 0.0]).unwrap();
        assert!(EllipticCoefficients::new(g, Diffusion::Constant(identity()), neg).is_err());
        let a = SpatialField::new(g, vec![1.0, 0.0, 1.0, 1.0]).unwrap();
        assert!(EllipticCoefficients::new(g, Diffusion::Isotropic(a), SpatialField::zeros(g)).is_err());
    }
}

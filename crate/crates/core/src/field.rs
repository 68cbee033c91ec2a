//! Nodal value containers.

use crate::error::{validation, Error, Result};
use crate::grid::GridSpec;

/// Common access to the nodal values of a field.
pub trait Field {
    fn grid(&self) -> &GridSpec;
    fn values(&self) -> &[f64];
    fn values_mut(&mut self) -> &mut [f64];
}

fn check(values: &[f64], expected: usize) -> Result<()> {
    if values.len() != expected {
        return Err(Error::Shape { expected, found: values.len() });
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(validation(format!("non-finite value at index {i}")));
    }
    Ok(())
}

macro_rules! field_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name {
            grid: GridSpec,
            values: Vec<f64>,
        }

        impl Field for $name {
            fn grid(&self) -> &GridSpec {
                &self.grid
            }
            fn values(&self) -> &[f64] {
                &self.values
            }
            fn values_mut(&mut self) -> &mut [f64] {
                &mut self.values
            }
        }

        impl $name {
            pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
                check(&values, Self::expected_len(&grid))?;
                Ok(Self { grid, values })
            }

            pub fn zeros(grid: GridSpec) -> Self {
                let n = Self::expected_len(&grid);
                Self { grid, values: vec![0.0; n] }
            }

            pub fn constant(grid: GridSpec, c: f64) -> Self {
                let n = Self::expected_len(&grid);
                Self { grid, values: vec![c; n] }
            }

            /// Trusted constructor for solver output; the caller guarantees shape.
            pub(crate) fn from_raw(grid: GridSpec, values: Vec<f64>) -> Self {
                debug_assert_eq!(values.len(), Self::expected_len(&grid));
                Self { grid, values }
            }

            pub fn into_values(self) -> Vec<f64> {
                self.values
            }

            pub fn max_abs(&self) -> f64 {
                self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
            }

            pub fn is_finite(&self) -> bool {
                self.values.iter().all(|v| v.is_finite())
            }

            fn same_shape(&self, other: &Self) -> Result<()> {
                if self.grid != other.grid {
                    return Err(Error::Argument("fields live on different grids".into()));
                }
                Ok(())
            }

            /// `self + s * other`.
            pub fn axpy(&self, s: f64, other: &Self) -> Result<Self> {
                self.same_shape(other)?;
                let values = self.values.iter().zip(&other.values).map(|(a, b)| a + s * b).collect();
                Ok(Self { grid: self.grid, values })
            }

            pub fn scaled(&self, s: f64) -> Self {
                Self { grid: self.grid, values: self.values.iter().map(|v| s * v).collect() }
            }
        }
    };
}

field_type!(
    /// One value per spatial node.
    SpatialField
);
field_type!(
    /// One value per `(time level, spatial node)`, time levels `0..=nt`, time-major.
    SpaceTimeField
);
field_type!(
    /// One value per boundary node, in the order of [`GridSpec::boundary_nodes`].
    BoundaryField
);

impl SpatialField {
    fn expected_len(grid: &GridSpec) -> usize {
        grid.node_count()
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> f64) -> Result<Self> {
        let values = (0..grid.node_count()).map(|i| f(grid.coords(i))).collect();
        Self::new(grid.spatial_only(), values)
    }
}

impl SpaceTimeField {
    fn expected_len(grid: &GridSpec) -> usize {
        (grid.steps() + 1) * grid.node_count()
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3], f64) -> f64) -> Result<Self> {
        if grid.time().is_none() {
            return Err(Error::Argument("space-time field needs a grid with a time axis".into()));
        }
        let n = grid.node_count();
        let mut values = Vec::with_capacity((grid.steps() + 1) * n);
        for m in 0..=grid.steps() {
            let t = grid.time_level(m);
            values.extend((0..n).map(|i| f(grid.coords(i), t)));
        }
        Self::new(grid, values)
    }

    /// The same spatial field repeated on every time level.
    pub fn from_spatial(grid: GridSpec, field: &SpatialField) -> Result<Self> {
        if field.grid().spatial_only() != grid.spatial_only() {
            return Err(Error::Argument("spatial field grid differs from space-time grid".into()));
        }
        let values = field.values().repeat(grid.steps() + 1);
        Self::new(grid, values)
    }

    pub fn level(&self, m: usize) -> &[f64] {
        let n = self.grid.node_count();
        &self.values[m * n..(m + 1) * n]
    }

    pub fn level_mut(&mut self, m: usize) -> &mut [f64] {
        let n = self.grid.node_count();
        &mut self.values[m * n..(m + 1) * n]
    }
}

impl BoundaryField {
    fn expected_len(grid: &GridSpec) -> usize {
        grid.boundary_nodes().len()
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> f64) -> Result<Self> {
        let values = grid.boundary_nodes().into_iter().map(|i| f(grid.coords(i))).collect();
        Self::new(grid.spatial_only(), values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_finiteness_enforced() {
        let g = GridSpec::unit(2, 3).unwrap();
        assert!(SpatialField::new(g, vec![0.0; 8]).is_err());
        assert!(SpatialField::new(g, vec![f64::NAN; 9]).is_err());
        assert_eq!(BoundaryField::zeros(g).values().len(), 8);
        let gt = g.with_time(4, 1.0).unwrap();
        assert_eq!(SpaceTimeField::zeros(gt).values().len(), 45);
        assert!(SpaceTimeField::from_fn(g, |_, _| 0.0).is_err());
    }

    #[test]
    fn levels_are_time_major() {
        let g = GridSpec::unit(1, 3).unwrap().with_time(2, 1.0).unwrap();
        let f = SpaceTimeField::from_fn(g, |x, t| x[0] + 10.0 * t).unwrap();
        assert_eq!(f.level(2), &[10.0, 10.5, 11.0]);
    }
}

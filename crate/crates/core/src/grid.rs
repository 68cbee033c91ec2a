//! Uniform tensor-product grids on boxes `(0, L_1) x ... x (0, L_n)`, with an
//! optional uniform time axis.
//!
//! Nodes are numbered lexicographically in `(i_1, ..., i_n)`, so the last axis
//! varies fastest. Space-time data is stored time-major: level `m` occupies the
//! block `m * nodes .. (m + 1) * nodes`.

use crate::error::{argument, Result};

/// Largest number of space-time values a grid may address.
const MAX_VALUES: usize = 1 << 31;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeAxis {
    pub steps: usize,
    pub final_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    dim: usize,
    lengths: [f64; 3],
    nodes: [usize; 3],
    time: Option<TimeAxis>,
}

impl GridSpec {
    /// A purely spatial grid. `lengths` and `nodes` must both have `dim` entries.
    pub fn spatial(lengths: &[f64], nodes: &[usize]) -> Result<Self> {
        let dim = lengths.len();
        if !(1..=3).contains(&dim) {
            return Err(argument(format!("dimension {dim} not in 1..=3")));
        }
        if nodes.len() != dim {
            return Err(argument(format!(
                "{} lengths but {} node counts",
                dim,
                nodes.len()
            )));
        }
        let mut l = [1.0; 3];
        let mut nx = [1usize; 3];
        let mut total: usize = 1;
        for i in 0..dim {
            if !(lengths[i].is_finite() && lengths[i] > 0.0) {
                return Err(argument(format!("length L{} = {} must be positive", i + 1, lengths[i])));
            }
            if nodes[i] < 3 {
                return Err(argument(format!("nx{} = {} must be at least 3", i + 1, nodes[i])));
            }
            l[i] = lengths[i];
            nx[i] = nodes[i];
            total = total
                .checked_mul(nodes[i])
                .filter(|&t| t <= MAX_VALUES)
                .ok_or_else(|| argument("grid node count overflows addressable memory"))?;
        }
        Ok(Self { dim, lengths: l, nodes: nx, time: None })
    }

    /// Unit cube `(0,1)^dim` with `nx` nodes per axis.
    pub fn unit(dim: usize, nx: usize) -> Result<Self> {
        Self::spatial(&vec![1.0; dim], &vec![nx; dim])
    }

    /// Attach a time axis with `steps` implicit steps up to `final_time`.
    pub fn with_time(mut self, steps: usize, final_time: f64) -> Result<Self> {
        if steps < 1 {
            return Err(argument("nt must be at least 1"));
        }
        if !(final_time.is_finite() && final_time > 0.0) {
            return Err(argument(format!("final time T = {final_time} must be positive")));
        }
        (steps + 1)
            .checked_mul(self.node_count())
            .filter(|&t| t <= MAX_VALUES)
            .ok_or_else(|| argument("space-time value count overflows addressable memory"))?;
        self.time = Some(TimeAxis { steps, final_time });
        Ok(self)
    }

    pub fn spatial_only(&self) -> Self {
        Self { time: None, ..*self }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn length(&self, axis: usize) -> f64 {
        self.lengths[axis]
    }

    pub fn nodes_along(&self, axis: usize) -> usize {
        self.nodes[axis]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.lengths[axis] / (self.nodes[axis] - 1) as f64
    }

    pub fn time(&self) -> Option<TimeAxis> {
        self.time
    }

    /// Number of time steps; zero for spatial grids.
    pub fn steps(&self) -> usize {
        self.time.map_or(0, |t| t.steps)
    }

    /// Time step `T / nt`; zero for spatial grids.
    pub fn tau(&self) -> f64 {
        self.time.map_or(0.0, |t| t.final_time / t.steps as f64)
    }

    pub fn time_level(&self, m: usize) -> f64 {
        m as f64 * self.tau()
    }

    pub fn node_count(&self) -> usize {
        self.nodes[..self.dim].iter().product()
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.nodes[axis + 1..self.dim].iter().product()
    }

    pub fn multi_index(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0; 3];
        for axis in (0..self.dim).rev() {
            out[axis] = idx % self.nodes[axis];
            idx /= self.nodes[axis];
        }
        out
    }

    pub fn linear_index(&self, multi: [usize; 3]) -> usize {
        (0..self.dim).fold(0, |acc, a| acc * self.nodes[a] + multi[a])
    }

    pub fn coords(&self, idx: usize) -> [f64; 3] {
        let mi = self.multi_index(idx);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = if mi[a] == self.nodes[a] - 1 {
                self.lengths[a]
            } else {
                mi[a] as f64 * self.spacing(a)
            };
        }
        x
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        let mi = self.multi_index(idx);
        (0..self.dim).any(|a| mi[a] == 0 || mi[a] == self.nodes[a] - 1)
    }

    /// Boundary nodes in ascending lexicographic order.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|&i| self.is_boundary(i)).collect()
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|&i| !self.is_boundary(i)).collect()
    }

    /// One-dimensional trapezoid weight of index `i` along `axis`.
    pub fn axis_weight(&self, axis: usize, i: usize) -> f64 {
        let h = self.spacing(axis);
        if i == 0 || i == self.nodes[axis] - 1 {
            0.5 * h
        } else {
            h
        }
    }

    /// Tensor trapezoid weights for every spatial node.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        (0..self.node_count())
            .map(|i| {
                let mi = self.multi_index(i);
                (0..self.dim).map(|a| self.axis_weight(a, mi[a])).product()
            })
            .collect()
    }

    /// Trapezoid weights of the boundary surface measure, one per boundary node.
    ///
    /// A node on several faces collects the face weight of each of them; in 1D
    /// every face is a point of weight 1.
    pub fn boundary_weights(&self) -> Vec<f64> {
        self.boundary_nodes()
            .into_iter()
            .map(|idx| {
                let mi = self.multi_index(idx);
                let mut w = 0.0;
                for a in 0..self.dim {
                    let on_face = if mi[a] == 0 { 1 } else { 0 } + if mi[a] == self.nodes[a] - 1 { 1 } else { 0 };
                    if on_face == 0 {
                        continue;
                    }
                    let face: f64 = (0..self.dim)
                        .filter(|&b| b != a)
                        .map(|b| self.axis_weight(b, mi[b]))
                        .product();
                    w += on_face as f64 * face;
                }
                w
            })
            .collect()
    }

    pub fn measure(&self) -> f64 {
        self.lengths[..self.dim].iter().product()
    }
}

//! Discrete norms and inner products.
//!
//! Space uses composite trapezoid weights; time uses the right-endpoint
//! rectangle rule, so level 0 of a space-time field carries zero weight.
//! `p = f64::INFINITY` selects nodal maxima.

use crate::error::{argument, Result};
use crate::field::{BoundaryField, Field, SpaceTimeField, SpatialField};
use crate::grid::GridSpec;

/// Fields that carry a quadrature rule.
pub trait Weighted: Field {
    fn weights(&self) -> Vec<f64>;
}

impl Weighted for SpatialField {
    fn weights(&self) -> Vec<f64> {
        self.grid().trapezoid_weights()
    }
}

impl Weighted for BoundaryField {
    fn weights(&self) -> Vec<f64> {
        self.grid().boundary_weights()
    }
}

impl Weighted for SpaceTimeField {
    fn weights(&self) -> Vec<f64> {
        space_time_weights(self.grid())
    }
}

pub fn space_time_weights(grid: &GridSpec) -> Vec<f64> {
    let w = grid.trapezoid_weights();
    let tau = grid.tau();
    let mut out = vec![0.0; w.len()];
    for _ in 1..=grid.steps() {
        out.extend(w.iter().map(|x| tau * x));
    }
    out
}

fn check_exponent(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(argument(format!("exponent {p} must lie in [1, inf]")));
    }
    Ok(())
}

pub(crate) fn weighted_lp(values: &[f64], weights: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return values.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    if p == 2.0 {
        return values.iter().zip(weights).map(|(v, w)| w * v * v).sum::<f64>().sqrt();
    }
    let s: f64 = values.iter().zip(weights).map(|(v, w)| w * v.abs().powf(p)).sum();
    s.powf(1.0 / p)
}

pub fn lp_norm<F: Weighted>(field: &F, p: f64) -> Result<f64> {
    check_exponent(p)?;
    Ok(weighted_lp(field.values(), &field.weights(), p))
}

pub fn weighted_inner<F: Weighted>(a: &F, b: &F) -> Result<f64> {
    if a.grid() != b.grid() {
        return Err(argument("inner product of fields on different grids"));
    }
    Ok(a.values().iter().zip(b.values()).zip(a.weights()).map(|((x, y), w)| w * x * y).sum())
}

/// `|| t -> ||field(., t)||_{L^gamma} ||_{L^sigma(0,T)}`.
///
/// The finite-sigma integral uses levels `1..=nt`; `sigma = inf` takes the
/// maximum over all levels including the initial one.
pub fn bochner_norm(field: &SpaceTimeField, sigma: f64, gamma: f64) -> Result<f64> {
    check_exponent(sigma)?;
    check_exponent(gamma)?;
    let grid = field.grid();
    let w = grid.trapezoid_weights();
    let per_level: Vec<f64> =
        (0..=grid.steps()).map(|m| weighted_lp(field.level(m), &w, gamma)).collect();
    if sigma.is_infinite() {
        return Ok(per_level.iter().fold(0.0, |m, v| m.max(*v)));
    }
    let tau = grid.tau();
    let s: f64 = per_level[1..].iter().map(|v| tau * v.powf(sigma)).sum();
    Ok(s.powf(1.0 / sigma))
}

/// Squared discrete H1 seminorm from forward differences along each axis,
/// each edge weighted by the transverse trapezoid weights times its length.
pub fn h1_seminorm_sq(grid: &GridSpec, values: &[f64]) -> f64 {
    let mut total = 0.0;
    for axis in 0..grid.dim() {
        let h = grid.spacing(axis);
        let stride = grid.stride(axis);
        for p in 0..grid.node_count() {
            let mi = grid.multi_index(p);
            if mi[axis] + 1 == grid.nodes_along(axis) {
                continue;
            }
            let transverse: f64 = (0..grid.dim())
                .filter(|&b| b != axis)
                .map(|b| grid.axis_weight(b, mi[b]))
                .product();
            let d = (values[p + stride] - values[p]) / h;
            total += transverse * h * d * d;
        }
    }
    total
}

/// Full discrete H1 norm: seminorm plus trapezoid L2 part.
pub fn h1_norm(field: &SpatialField) -> f64 {
    let l2 = weighted_lp(field.values(), &field.grid().trapezoid_weights(), 2.0);
    (h1_seminorm_sq(field.grid(), field.values()) + l2 * l2).sqrt()
}

//! The closed catalog of admissible nonlinearities and the truncation operator.

use crate::error::{argument, validation, Result};
use crate::field::{Field, SpatialField};

/// Pointwise clamp `min(max(-k, s), k)`.
pub fn truncate(s: f64, k: f64) -> Result<f64> {
    if !(k > 0.0) {
        return Err(argument(format!("truncation level k = {k} must be positive")));
    }
    Ok(s.clamp(-k, k))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NonlinearityKind {
    /// `c s^3`, `c >= 0`.
    Cubic { c: f64 },
    /// `c s^3 - lambda s`, `c, lambda >= 0`.
    CubicMinusLinear { c: f64, lambda: f64 },
    /// `c (e^s - 1)`, `c >= 0`.
    Expm1 { c: f64 },
}

/// A scalar nonlinearity `f(s) = base(s) + offset` with its lower slope bound.
///
/// Admissible nonlinearities have `offset == 0`; a nonzero offset only exists
/// so that elliptic problems can absorb `f(., 0)` into the source term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nonlinearity {
    kind: NonlinearityKind,
    offset: f64,
    lambda_f: f64,
}

impl Nonlinearity {
    pub fn new(kind: NonlinearityKind) -> Result<Self> {
        let (params, lambda_f): (&[f64], f64) = match &kind {
            NonlinearityKind::Cubic { c } => (std::slice::from_ref(c), 0.0),
            NonlinearityKind::CubicMinusLinear { c, lambda } => {
                if !(lambda.is_finite() && *lambda >= 0.0) {
                    return Err(argument(format!("lambda = {lambda} must be nonnegative")));
                }
                (std::slice::from_ref(c), *lambda)
            }
            NonlinearityKind::Expm1 { c } => (std::slice::from_ref(c), 0.0),
        };
        if !params.iter().all(|c| c.is_finite() && *c >= 0.0) {
            return Err(argument("nonlinearity coefficient c must be finite and nonnegative"));
        }
        Ok(Self { kind, offset: 0.0, lambda_f })
    }

    pub fn zero() -> Self {
        Self { kind: NonlinearityKind::Cubic { c: 0.0 }, offset: 0.0, lambda_f: 0.0 }
    }

    pub fn cubic(c: f64) -> Result<Self> {
        Self::new(NonlinearityKind::Cubic { c })
    }

    pub fn cubic_minus_linear(c: f64, lambda: f64) -> Result<Self> {
        Self::new(NonlinearityKind::CubicMinusLinear { c, lambda })
    }

    pub fn expm1(c: f64) -> Result<Self> {
        Self::new(NonlinearityKind::Expm1 { c })
    }

    /// Adds a constant to `f`, breaking `f(0) = 0`.
    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    /// Overrides the declared lower slope bound.
    pub fn with_lambda_f(mut self, lambda_f: f64) -> Self {
        self.lambda_f = lambda_f;
        self
    }

    pub fn kind(&self) -> NonlinearityKind {
        self.kind
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn lambda_f(&self) -> f64 {
        self.lambda_f
    }

    pub fn is_zero(&self) -> bool {
        self.offset == 0.0
            && match self.kind {
                NonlinearityKind::Cubic { c } | NonlinearityKind::Expm1 { c } => c == 0.0,
                NonlinearityKind::CubicMinusLinear { c, lambda } => c == 0.0 && lambda == 0.0,
            }
    }

    pub fn value(&self, s: f64) -> f64 {
        self.offset
            + match self.kind {
                NonlinearityKind::Cubic { c } => c * s * s * s,
                NonlinearityKind::CubicMinusLinear { c, lambda } => c * s * s * s - lambda * s,
                NonlinearityKind::Expm1 { c } => c * s.exp_m1(),
            }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        match self.kind {
            NonlinearityKind::Cubic { c } => 3.0 * c * s * s,
            NonlinearityKind::CubicMinusLinear { c, lambda } => 3.0 * c * s * s - lambda,
            NonlinearityKind::Expm1 { c } => c * s.exp(),
        }
    }

    /// `f(P_k(s))`.
    pub fn truncated_value(&self, s: f64, k: f64) -> f64 {
        self.value(s.clamp(-k, k))
    }

    /// Derivative of `f o P_k`: `f'(P_k(s))` inside the box, zero outside.
    pub fn truncated_derivative(&self, s: f64, k: f64) -> f64 {
        if s.abs() <= k {
            self.derivative(s)
        } else {
            0.0
        }
    }
}

/// Outcome of [`check_nonlinearity`].
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearityReport {
    pub value_at_zero: f64,
    pub min_derivative: f64,
    pub min_derivative_at: f64,
    pub lambda_f: f64,
}

/// Samples `[-radius, radius]` and verifies `f(0) = 0`, `f' >= -lambda_f` and
/// `f(s) s >= -lambda_f s^2`.
pub fn check_nonlinearity(f: &Nonlinearity, radius: f64, samples: usize) -> Result<NonlinearityReport> {
    if !(radius > 0.0) || samples < 2 {
        return Err(argument("need radius > 0 and at least 2 samples"));
    }
    let f0 = f.value(0.0);
    if f0 != 0.0 {
        return Err(validation(format!("f(0) = 0 violated: f(0) = {f0} (witness s = 0)")));
    }
    let lambda = f.lambda_f();
    let tol = 1e-12 * (1.0 + lambda);
    let mut min_d = f64::INFINITY;
    let mut min_at = 0.0;
    for i in 0..samples {
        let s = -radius + 2.0 * radius * i as f64 / (samples - 1) as f64;
        let d = f.derivative(s);
        if d < min_d {
            min_d = d;
            min_at = s;
        }
        if d < -lambda - tol {
            return Err(validation(format!(
                "slope bound f'(s) >= -{lambda} violated: f'({s}) = {d}"
            )));
        }
        let fs = f.value(s) * s;
        if fs < -lambda * s * s - tol * s * s {
            return Err(validation(format!(
                "sign bound f(s) s >= -{lambda} s^2 violated at s = {s}: f(s) s = {fs}"
            )));
        }
    }
    Ok(NonlinearityReport { value_at_zero: f0, min_derivative: min_d, min_derivative_at: min_at, lambda_f: lambda })
}

/// `f(x, s) = w(x) base(s)` with a nonnegative nodal weight.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialNonlinearity {
    base: Nonlinearity,
    weight: SpatialField,
}

impl SpatialNonlinearity {
    pub fn new(base: Nonlinearity, weight: SpatialField) -> Result<Self> {
        if let Some(i) = weight.values().iter().position(|w| *w < 0.0) {
            return Err(validation(format!("nonlinearity weight negative at node {i}")));
        }
        Ok(Self { base, weight })
    }

    pub fn uniform(base: Nonlinearity, grid: crate::grid::GridSpec) -> Self {
        Self { base, weight: SpatialField::constant(grid.spatial_only(), 1.0) }
    }

    pub fn base(&self) -> &Nonlinearity {
        &self.base
    }

    pub fn weight(&self) -> &SpatialField {
        &self.weight
    }

    pub fn value(&self, node: usize, s: f64) -> f64 {
        self.weight.values()[node] * self.base.value(s)
    }

    pub fn derivative(&self, node: usize, s: f64) -> f64 {
        self.weight.values()[node] * self.base.derivative(s)
    }

    pub(crate) fn without_offset(&self) -> Self {
        Self { base: self.base.with_offset(0.0), weight: self.weight.clone() }
    }
}

//! Numerical toolkit for optimal control of semilinear parabolic equations with
//! distributed control and semilinear elliptic equations with Neumann boundary
//! control, in the unconstrained `L^2` setting.
//!
//! * [`grid`], [`field`], [`quadrature`], [`nonlinearity`], [`coefficients`]:
//!   shared domain types and discrete norms.
//! * [`parabolic`]: implicit Euler state solver, truncated variant, adjoint.
//! * [`elliptic`]: Neumann state solver, adjoint, trace, coercivity.
//! * [`optimize`]: objective, adjoint gradient, descent, box-truncated
//!   proximal problems and the truncation homotopy.
//! * [`analysis`]: regularity exponents and the dyadic bump counterexample.
//! * [`io`]: CSV field files and report files.

// `!(x > 0.0)` is the idiomatic NaN-rejecting guard here; index loops mirror the stencils.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod coefficients;
pub mod elliptic;
pub mod error;
pub mod field;
pub mod grid;
pub mod io;
mod newton;
pub mod nonlinearity;
pub mod operator;
pub mod optimize;
pub mod parabolic;
pub mod quadrature;
pub mod sparse;

pub use coefficients::{Diffusion, EllipticCoefficients};
pub use error::{Error, Result};
pub use field::{BoundaryField, Field, SpaceTimeField, SpatialField};
pub use grid::GridSpec;
pub use nonlinearity::{check_nonlinearity, truncate, Nonlinearity, SpatialNonlinearity};
pub use operator::{assemble_operator, bilinear_form, BoundaryCondition};
pub use quadrature::{bochner_norm, lp_norm, weighted_inner};

/// Newton and linear-solver settings shared by all state solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Tolerance on the nonlinear residual relative to `1 + ||rhs||_inf`.
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Linear systems are solved by banded LU; this is the residual level the
    /// factorization is checked against.
    pub linear_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { newton_tol: 1e-10, max_newton: 50, linear_tol: 1e-12 }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.newton_tol > 0.0 && self.linear_tol > 0.0) || self.max_newton == 0 {
            return Err(Error::Argument("solver tolerances and iteration caps must be positive".into()));
        }
        Ok(())
    }
}

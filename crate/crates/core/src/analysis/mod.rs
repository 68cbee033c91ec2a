//! Regularity exponents and the unbounded-state counterexample.

pub mod bump;
pub mod counterexample;
pub mod exponents;
mod quad;

pub use bump::{bump_eval, bump_norms, BumpDerivative, BumpNorms};
pub use counterexample::{
    control_norm_sq_series, counterexample_control, counterexample_control_norm, counterexample_norm_series,
    counterexample_value, harmonic, min_on_cylinder, series_factor, SeriesKind,
};
pub use exponents::{
    bootstrap_steps, elliptic_exponents, gn_exponent, parabolic_exponent, parse_rational, Exponent,
    ExponentReport, ValidityFlag,
};

//! Adaptive Gauss-Legendre quadrature on intervals.

const NODES: [f64; 5] = [-0.906_179_845_938_664, -0.538_469_310_105_683_1, 0.0, 0.538_469_310_105_683_1, 0.906_179_845_938_664];
const WEIGHTS: [f64; 5] =
    [0.236_926_885_056_189_1, 0.478_628_670_499_366_5, 0.568_888_888_888_888_9, 0.478_628_670_499_366_5, 0.236_926_885_056_189_1];

const MAX_DEPTH: u32 = 30;

fn rule(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    h * NODES.iter().zip(WEIGHTS).map(|(x, w)| w * f(c + h * x)).sum::<f64>()
}

fn recurse(f: &impl Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let left = rule(f, a, m);
    let right = rule(f, m, b);
    let refined = left + right;
    if depth >= MAX_DEPTH || (refined - whole).abs() <= tol.max(1e-14 * refined.abs()) {
        return refined;
    }
    recurse(f, a, m, left, 0.5 * tol, depth + 1) + recurse(f, m, b, right, 0.5 * tol, depth + 1)
}

/// `int_a^b f` to absolute accuracy about `tol`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let whole = rule(&f, a, b);
    recurse(&f, a, b, whole, tol, 0)
}

/// Sum of [`integrate`] over consecutive breakpoints.
pub fn integrate_pieces(f: impl Fn(f64) -> f64, breaks: &[f64], tol: f64) -> f64 {
    let pieces = breaks.len().saturating_sub(1).max(1) as f64;
    breaks.windows(2).map(|w| integrate(&f, w[0], w[1], tol / pieces)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_and_transcendentals() {
        assert!((integrate(|x| x.powi(9), 0.0, 1.0, 1e-14) - 0.1).abs() < 1e-14);
        assert!((integrate(f64::sin, 0.0, std::f64::consts::PI, 1e-13) - 2.0).abs() < 1e-12);
        assert!((integrate(|x| (-1.0 / x).exp(), 0.0, 1.0, 1e-13) - 0.148_495_506_775_922).abs() < 1e-12);
        assert!((integrate_pieces(|x| x.abs(), &[-1.0, 0.0, 2.0], 1e-14) - 2.5).abs() < 1e-14);
    }
}

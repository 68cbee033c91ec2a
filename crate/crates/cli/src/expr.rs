//! Closed catalog of field expressions used for data and initial guesses.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semicontrol::GridSpec;

/// A named nodal expression. Spatial expressions are constant in time when
/// sampled on a space-time grid; `random` draws a fresh value per node and level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Expr {
    Zero,
    One,
    Const(f64),
    /// `prod_i sin(pi x_i / L_i)`.
    SinSin,
    /// `exp(-c |x - center|^2)`.
    Gauss(f64),
    /// `x_i`, 1-based axis.
    Coord(usize),
    /// Uniform in `[-amp, amp]`, seeded.
    Random(f64),
}

impl Expr {
    pub fn parse(text: &str) -> Result<Self, String> {
        let t = text.trim();
        let (id, arg) = match t.split_once(':') {
            Some((id, arg)) => (id.trim(), Some(arg.trim())),
            None => (t, None),
        };
        let number = |arg: Option<&str>| -> Result<f64, String> {
            let a = arg.ok_or_else(|| format!("expression '{id}' needs a parameter, e.g. '{id}:1'"))?;
            let v: f64 = a.parse().map_err(|_| format!("'{a}' is not a number"))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format!("parameter '{a}' must be finite"))
            }
        };
        let no_arg = |e: Expr| match arg {
            Some(_) => Err(format!("expression '{id}' takes no parameter")),
            None => Ok(e),
        };
        match id {
            "zero" => no_arg(Expr::Zero),
            "one" => no_arg(Expr::One),
            "sinsin" => no_arg(Expr::SinSin),
            "const" => number(arg).map(Expr::Const),
            "gauss" => {
                let c = number(arg)?;
                if c < 0.0 {
                    return Err(format!("gauss width parameter {c} must be nonnegative"));
                }
                Ok(Expr::Gauss(c))
            }
            "coord" => {
                let a = arg.ok_or("expression 'coord' needs an axis, e.g. 'coord:1'")?;
                let i: usize = a.parse().map_err(|_| format!("'{a}' is not an axis index"))?;
                if !(1..=3).contains(&i) {
                    return Err(format!("axis {i} not in 1..=3"));
                }
                Ok(Expr::Coord(i))
            }
            "random" => {
                let a = number(arg)?;
                if a < 0.0 {
                    return Err(format!("random amplitude {a} must be nonnegative"));
                }
                Ok(Expr::Random(a))
            }
            "" => Err("empty expression".into()),
            other => Err(format!(
                "unknown expression '{other}' (expected zero, one, const:c, sinsin, gauss:c, coord:i, random:amp)"
            )),
        }
    }

    pub fn check_dim(&self, dim: usize) -> Result<(), String> {
        match self {
            Expr::Coord(i) if *i > dim => Err(format!("coord:{i} on a {dim}-dimensional grid")),
            _ => Ok(()),
        }
    }

    fn at(&self, grid: &GridSpec, x: [f64; 3]) -> f64 {
        let dim = grid.dim();
        match *self {
            Expr::Zero | Expr::Random(_) => 0.0,
            Expr::One => 1.0,
            Expr::Const(c) => c,
            Expr::SinSin => (0..dim).map(|i| (std::f64::consts::PI * x[i] / grid.length(i)).sin()).product(),
            Expr::Gauss(c) => {
                let r2: f64 = (0..dim).map(|i| (x[i] - 0.5 * grid.length(i)).powi(2)).sum();
                (-c * r2).exp()
            }
            Expr::Coord(i) => x[i - 1],
        }
    }

    /// Values at the given spatial nodes, repeated for `levels` time levels.
    /// `stream` separates the random draws of different config keys.
    pub fn sample(&self, grid: &GridSpec, nodes: &[usize], levels: usize, seed: u64, stream: u64) -> Vec<f64> {
        if let Expr::Random(amp) = *self {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            let count = nodes.len() * levels;
            if amp == 0.0 {
                return vec![0.0; count];
            }
            return (0..count).map(|_| rng.gen_range(-amp..=amp)).collect();
        }
        let level: Vec<f64> = nodes.iter().map(|&i| self.at(grid, grid.coords(i))).collect();
        level.repeat(levels)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Zero => f.write_str("zero"),
            Expr::One => f.write_str("one"),
            Expr::Const(c) => write!(f, "const:{c}"),
            Expr::SinSin => f.write_str("sinsin"),
            Expr::Gauss(c) => write!(f, "gauss:{c}"),
            Expr::Coord(i) => write!(f, "coord:{i}"),
            Expr::Random(a) => write!(f, "random:{a}"),
        }
    }
}

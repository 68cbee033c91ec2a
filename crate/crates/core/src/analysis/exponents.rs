//! Integrability exponents in exact rational arithmetic.

use std::fmt;

use num::{BigInt, BigRational, Signed, ToPrimitive, Zero};

use crate::error::{argument, Result};

/// A Lebesgue exponent: an exact rational or `inf`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Exponent {
    Finite(BigRational),
    Infinite,
}

impl Exponent {
    pub fn finite(&self) -> Option<&BigRational> {
        match self {
            Exponent::Finite(r) => Some(r),
            Exponent::Infinite => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Exponent::Finite(r) => r.to_f64().unwrap_or(f64::NAN),
            Exponent::Infinite => f64::INFINITY,
        }
    }

    /// `1 / reciprocal`, with a vanishing reciprocal mapped to `inf`.
    fn from_reciprocal(reciprocal: BigRational) -> Self {
        if reciprocal.is_zero() {
            Exponent::Infinite
        } else {
            Exponent::Finite(reciprocal.recip())
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Exponent::Finite(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Exponent::Infinite => f.write_str("inf"),
        }
    }
}

/// One checked precondition or internal identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidityFlag {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Inputs, outputs and checks of an exponent computation. Outputs are only
/// filled in when every precondition flag passes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExponentReport {
    pub n: u32,
    pub r: BigRational,
    pub s: Option<BigRational>,
    pub p: Option<Exponent>,
    pub q: Option<Exponent>,
    pub q_tilde: Option<Exponent>,
    /// Set at the critical exponent where every finite `q` is admissible.
    pub arbitrary_finite: bool,
    pub flags: Vec<ValidityFlag>,
}

impl ExponentReport {
    fn new(n: u32, r: BigRational) -> Self {
        Self { n, r, s: None, p: None, q: None, q_tilde: None, arbitrary_finite: false, flags: vec![] }
    }

    pub fn is_valid(&self) -> bool {
        self.flags.iter().all(|f| f.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ValidityFlag> {
        self.flags.iter().filter(|f| !f.passed)
    }

    fn flag(&mut self, name: &'static str, passed: bool, detail: String) -> bool {
        self.flags.push(ValidityFlag { name, passed, detail });
        passed
    }
}

fn int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

fn show(r: &BigRational) -> String {
    Exponent::Finite(r.clone()).to_string()
}

/// Parses `"a"`, `"a/b"` or a finite decimal such as `"2.5"` into an exact rational.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let t = text.trim();
    let bad = || argument(format!("cannot parse '{text}' as a rational number"));
    if let Some((a, b)) = t.split_once('/') {
        let a: BigInt = a.trim().parse().map_err(|_| bad())?;
        let b: BigInt = b.trim().parse().map_err(|_| bad())?;
        if b.is_zero() {
            return Err(argument(format!("zero denominator in '{text}'")));
        }
        return Ok(BigRational::new(a, b));
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    if whole.is_empty() && frac.is_empty()
        || !whole.chars().all(|c| c.is_ascii_digit())
        || !frac.chars().all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let digits = format!("{whole}{frac}");
    let numer: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().map_err(|_| bad())? };
    let denom = num::pow(BigInt::from(10), frac.len());
    let r = BigRational::new(numer, denom);
    Ok(if neg { -r } else { r })
}

/// `2 (n + 2) / n`, the exponent of the parabolic energy-space embedding.
pub fn gn_exponent(n: u32) -> Result<BigRational> {
    if n < 2 {
        return Err(argument(format!("embedding exponent needs n >= 2, got n = {n}")));
    }
    Ok(BigRational::new(BigInt::from(2 * (n + 2)), BigInt::from(n)))
}

/// State integrability `q = r (n + 2) / (n + 2 - 2 r)` for data in `L^r`,
/// `r` in `[2, 1 + n/2]`; the right endpoint admits every finite `q`.
pub fn parabolic_exponent(r: &BigRational, n: u32) -> Result<ExponentReport> {
    if n == 0 {
        return Err(argument("dimension n must be positive"));
    }
    let mut rep = ExponentReport::new(n, r.clone());
    let ni = int(n as i64);
    let upper = int(1) + &ni / int(2);
    let lo_ok = *r >= int(2);
    let hi_ok = *r <= upper;
    rep.flag("r >= 2", lo_ok, format!("r = {}", show(r)));
    rep.flag("r <= 1 + n/2", hi_ok, format!("r = {}, 1 + n/2 = {}", show(r), show(&upper)));
    if !(lo_ok && hi_ok) {
        return Ok(rep);
    }
    if *r == upper {
        rep.q = Some(Exponent::Infinite);
        rep.arbitrary_finite = true;
        return Ok(rep);
    }
    let n2 = &ni + int(2);
    let q = r * &n2 / (&n2 - int(2) * r);
    let bound = r * &n2 / &ni;
    rep.flag("q >= r (n + 2) / n", q >= bound, format!("q = {}, bound = {}", show(&q), show(&bound)));
    rep.q = Some(Exponent::Finite(q));
    Ok(rep)
}

/// Exponent chain `e_j = 2 ((n + 2) / (n - 2))^j` up to the first `e_j > 1 + n/2`.
pub fn bootstrap_steps(n: u32) -> Result<(usize, Vec<BigRational>)> {
    if n < 3 {
        return Err(argument(format!(
            "bootstrap chain needs n >= 3 (the ratio (n + 2)/(n - 2) is undefined or negative for n = {n})"
        )));
    }
    let ratio = BigRational::new(BigInt::from(n + 2), BigInt::from(n - 2));
    let target = int(1) + BigRational::new(BigInt::from(n), BigInt::from(2));
    let mut e = int(2);
    let mut chain = Vec::new();
    loop {
        e *= &ratio;
        chain.push(e.clone());
        if e > target {
            return Ok((chain.len(), chain));
        }
    }
}

/// Exponents for the Neumann problem with boundary data in `L^r`: the source
/// exponent `s` from the compatibility relation, then `q` (boundary trace),
/// `q~` (domain) and the auxiliary `p`, with the identities
/// `q = p (n - 1)/(n - 2)` and `q~ = p n/(n - 2)` checked exactly.
pub fn elliptic_exponents(r: &BigRational, n: u32) -> Result<ExponentReport> {
    if n < 3 {
        return Err(argument(format!("elliptic exponents need n >= 3, got n = {n}")));
    }
    let mut rep = ExponentReport::new(n, r.clone());
    let ni = int(n as i64);
    let n1 = &ni - int(1);
    let n2 = &ni - int(2);
    let r_lo = int(2) * &n1 / &ni;
    let ok_lo = *r >= r_lo;
    let ok_hi = *r < n1;
    rep.flag("r >= 2(n - 1)/n", ok_lo, format!("r = {}, bound = {}", show(r), show(&r_lo)));
    rep.flag("r < n - 1", ok_hi, format!("r = {}, bound = {}", show(r), show(&n1)));
    if !(ok_lo && ok_hi) {
        return Ok(rep);
    }
    let inv_q = r.recip() - n1.recip();
    // (n - 1)(1/r - 1/(n - 1)) = n (1/s - 2/n)
    let inv_s = &n1 * &inv_q / &ni + int(2) / &ni;
    let s = inv_s.recip();
    let s_lo = int(2) * &ni / (&ni + int(2));
    let s_hi = &ni / int(2);
    let ok_s = s >= s_lo && s < s_hi;
    rep.flag("s in [2n/(n + 2), n/2)", ok_s, format!("s = {}", show(&s)));
    rep.s = Some(s);
    if !ok_s {
        return Ok(rep);
    }
    let inv_qt = &inv_s - int(2) / &ni;
    let inv_p = &n1 / &n2 * &inv_q;
    let inv_p_alt = &ni / &n2 * &inv_qt;
    rep.flag("p well defined", inv_p == inv_p_alt, format!("1/p = {} vs {}", show(&inv_p), show(&inv_p_alt)));
    let p = Exponent::from_reciprocal(inv_p.clone());
    let q = Exponent::from_reciprocal(inv_q);
    let qt = Exponent::from_reciprocal(inv_qt);
    if let (Some(pv), Some(qv), Some(qtv)) = (p.finite(), q.finite(), qt.finite()) {
        let q_from_p = pv * &n1 / &n2;
        let qt_from_p = pv * &ni / &n2;
        rep.flag("q = p (n - 1)/(n - 2)", *qv == q_from_p, format!("q = {}, p (n-1)/(n-2) = {}", show(qv), show(&q_from_p)));
        rep.flag("q~ = p n/(n - 2)", *qtv == qt_from_p, format!("q~ = {}, p n/(n-2) = {}", show(qtv), show(&qt_from_p)));
        rep.flag("p >= 2", *pv >= int(2), format!("p = {}", show(pv)));
    }
    debug_assert!(!inv_p.is_negative());
    rep.p = Some(p);
    rep.q = Some(q);
    rep.q_tilde = Some(qt);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rat(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn embedding_exponents() {
        assert_eq!(gn_exponent(2).unwrap(), rat(4, 1));
        assert_eq!(gn_exponent(3).unwrap(), rat(10, 3));
        assert_eq!(gn_exponent(4).unwrap(), rat(3, 1));
        assert!(gn_exponent(1).is_err());
    }

    #[test]
    fn parabolic_cases() {
        let r = parabolic_exponent(&rat(2, 1), 3).unwrap();
        assert_eq!(r.q, Some(Exponent::Finite(rat(10, 1))));
        assert!(r.is_valid());
        let r = parabolic_exponent(&rat(2, 1), 6).unwrap();
        assert_eq!(r.q, Some(Exponent::Finite(rat(4, 1))));
        let crit = parabolic_exponent(&rat(5, 2), 3).unwrap();
        assert!(crit.arbitrary_finite);
        assert_eq!(crit.q, Some(Exponent::Infinite));
        let out = parabolic_exponent(&rat(3, 1), 3).unwrap();
        assert!(!out.is_valid());
        assert!(out.q.is_none());
        assert!(out.failures().any(|f| f.name == "r <= 1 + n/2"));
    }

    #[test]
    fn bootstrap_chains() {
        assert_eq!(bootstrap_steps(3).unwrap(), (1, vec![rat(10, 1)]));
        assert_eq!(bootstrap_steps(6).unwrap(), (2, vec![rat(4, 1), rat(8, 1)]));
        assert_eq!(bootstrap_steps(10).unwrap(), (3, vec![rat(3, 1), rat(9, 2), rat(27, 4)]));
        assert!(bootstrap_steps(2).is_err());
    }

    #[test]
    fn elliptic_cases() {
        let e = elliptic_exponents(&rat(4, 3), 3).unwrap();
        assert!(e.is_valid());
        assert_eq!(e.s, Some(rat(6, 5)));
        assert_eq!(e.p, Some(Exponent::Finite(rat(2, 1))));
        assert_eq!(e.q, Some(Exponent::Finite(rat(4, 1))));
        assert_eq!(e.q_tilde, Some(Exponent::Finite(rat(6, 1))));
        let e = elliptic_exponents(&rat(3, 2), 4).unwrap();
        assert_eq!(e.s, Some(rat(4, 3)));
        assert_eq!(e.q, Some(Exponent::Finite(rat(3, 1))));
        assert_eq!(e.q_tilde, Some(Exponent::Finite(rat(4, 1))));
        let end = elliptic_exponents(&rat(2, 1), 3).unwrap();
        assert!(!end.is_valid());
        assert!(end.p.is_none());
        assert!(elliptic_exponents(&rat(1, 1), 2).is_err());
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("4/3").unwrap(), rat(4, 3));
        assert_eq!(parse_rational("2.5").unwrap(), rat(5, 2));
        assert_eq!(parse_rational("-0.125").unwrap(), rat(-1, 8));
        assert_eq!(parse_rational(" 7 ").unwrap(), rat(7, 1));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational(".").is_err());
        assert_eq!(Exponent::Finite(rat(10, 3)).to_string(), "10/3");
        assert_eq!(Exponent::Infinite.to_string(), "inf");
    }

    proptest! {
        #[test]
        fn elliptic_routes_agree(n in 3u32..9, num in 0i64..1000) {
            // Sample r across [2(n-1)/n, n-1).
            let lo = rat(2 * (n as i64 - 1), n as i64);
            let hi = rat(n as i64 - 1, 1);
            let r = &lo + (&hi - &lo) * rat(num, 1000);
            let e = elliptic_exponents(&r, n).unwrap();
            prop_assert!(e.is_valid(), "{:?}", e.flags);
        }

        #[test]
        fn parabolic_lower_bound(n in 2u32..12, num in 0i64..=1000) {
            let lo = rat(2, 1);
            let hi = rat(n as i64 + 2, 2);
            prop_assume!(lo <= hi);
            let r = &lo + (&hi - &lo) * rat(num, 1000);
            let e = parabolic_exponent(&r, n).unwrap();
            prop_assert!(e.is_valid());
        }
    }
}

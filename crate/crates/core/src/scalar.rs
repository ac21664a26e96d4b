//! Number types the library computes over.
//!
//! Every structure is generic over a [`Scalar`]: either [`Rational`]
//! (arbitrary-precision, exact) or `f64` (binary64 with small slacks on the
//! metric axioms). Exact mode is what makes regression tables reproducible
//! bit-for-bit; float mode is what makes large solver runs cheap.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Exact rational number backed by big integers.
pub type Rational = BigRational;

/// Which of the two scalar types a computation runs in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArithmeticMode {
    Exact,
    Float,
}

impl Display for ArithmeticMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ArithmeticMode::Exact => f.write_str("exact"),
            ArithmeticMode::Float => f.write_str("float"),
        }
    }
}

impl FromStr for ArithmeticMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(ArithmeticMode::Exact),
            "float" | "floating" => Ok(ArithmeticMode::Float),
            other => Err(Error::Parse(format!("unknown arithmetic mode `{other}`"))),
        }
    }
}

pub trait Scalar:
    Clone + Debug + Display + PartialOrd + Num + Signed + Send + Sync + 'static
{
    const MODE: ArithmeticMode;

    fn from_rational(q: &Rational) -> Self;
    /// Exact binary value of `x` in exact mode.
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn to_rational(&self) -> Rational;

    /// `self^alpha` for `self >= 0`, `None` when the result is not representable
    /// (an irrational root in exact mode).
    fn pow_rational(&self, alpha: &Rational) -> Option<Self>;

    /// Absolute slack on metric-axiom comparisons.
    fn axiom_slack() -> Self;

    /// Zeroes round-off residue. Identity in exact mode.
    fn clean(self) -> Self {
        self
    }

    /// `"p/q"` in exact mode, shortest round-trip decimal in float mode.
    fn render(&self) -> String;

    fn parse_str(s: &str) -> Result<Self, Error>;

    fn is_exact() -> bool {
        Self::MODE == ArithmeticMode::Exact
    }

    fn from_int(n: i64) -> Self {
        Self::from_rational(&Rational::from_integer(BigInt::from(n)))
    }

    fn convert_from<T: Scalar>(x: &T) -> Self {
        if Self::is_exact() {
            Self::from_rational(&x.to_rational())
        } else {
            Self::from_f64(x.to_f64())
        }
    }
}

impl Scalar for Rational {
    const MODE: ArithmeticMode = ArithmeticMode::Exact;

    fn from_rational(q: &Rational) -> Self {
        q.clone()
    }

    fn from_f64(x: f64) -> Self {
        Rational::from_float(x).expect("finite float")
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn to_rational(&self) -> Rational {
        self.clone()
    }

    fn pow_rational(&self, alpha: &Rational) -> Option<Self> {
        if self.is_negative() || alpha.is_negative() {
            return None;
        }
        if alpha.is_zero() {
            return Some(Rational::one());
        }
        if self.is_zero() {
            return Some(Rational::zero());
        }
        let p = alpha.numer().to_u32()?;
        let q = alpha.denom().to_u32()?;
        let numer = exact_root(&self.numer().pow(p), q)?;
        let denom = exact_root(&self.denom().pow(p), q)?;
        Some(Rational::new(numer, denom))
    }

    fn axiom_slack() -> Self {
        Rational::zero()
    }

    fn render(&self) -> String {
        if self.is_integer() {
            self.numer().to_string()
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }

    fn parse_str(s: &str) -> Result<Self, Error> {
        parse_rational(s)
    }
}

impl Scalar for f64 {
    const MODE: ArithmeticMode = ArithmeticMode::Float;

    fn from_rational(q: &Rational) -> Self {
        ToPrimitive::to_f64(q).unwrap_or(f64::NAN)
    }

    fn from_f64(x: f64) -> Self {
        x
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn to_rational(&self) -> Rational {
        Rational::from_float(*self).expect("finite float")
    }

    fn pow_rational(&self, alpha: &Rational) -> Option<Self> {
        if *self < 0.0 {
            return None;
        }
        if alpha.is_one() {
            return Some(*self);
        }
        Some(self.powf(Scalar::to_f64(alpha)))
    }

    fn axiom_slack() -> Self {
        1e-12
    }

    fn clean(self) -> Self {
        if self.abs() < 1e-14 {
            0.0
        } else {
            self
        }
    }

    fn render(&self) -> String {
        format!("{self}")
    }

    fn parse_str(s: &str) -> Result<Self, Error> {
        let s = s.trim();
        if s.contains('/') {
            return Ok(Scalar::to_f64(&parse_rational(s)?));
        }
        s.parse::<f64>()
            .map_err(|_| Error::Parse(format!("`{s}` is not a number")))
    }
}

fn exact_root(n: &BigInt, q: u32) -> Option<BigInt> {
    if q == 1 {
        return Some(n.clone());
    }
    let r = n.nth_root(q);
    (r.pow(q) == *n).then_some(r)
}

/// Parses `"p/q"`, `"p"`, or a finite decimal such as `"0.125"` exactly.
pub fn parse_rational(s: &str) -> Result<Rational, Error> {
    let s = s.trim();
    let bad = || Error::Parse(format!("`{s}` is not a rational number"));
    if let Some((p, q)) = s.split_once('/') {
        let p = BigInt::from_str(p.trim()).map_err(|_| bad())?;
        let q = BigInt::from_str(q.trim()).map_err(|_| bad())?;
        if q.is_zero() {
            return Err(Error::Parse(format!("`{s}` has a zero denominator")));
        }
        return Ok(Rational::new(p, q));
    }
    if let Ok(n) = BigInt::from_str(s) {
        return Ok(Rational::from_integer(n));
    }
    // finite decimal, optionally signed, no exponent
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = body.split_once('.').ok_or_else(bad)?;
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit())
        || (int.is_empty() && frac.is_empty())
    {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let numer = BigInt::from_str(&digits).map_err(|_| bad())?;
    let denom = BigInt::from(10u32).pow(frac.len() as u32);
    let q = Rational::new(numer, denom);
    Ok(if neg { -q } else { q })
}

/// `n / d` as an exact rational.
pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// `base^(-exp)` exactly, e.g. `pow_inv(4, 3) = 1/64`.
pub fn pow_inv(base: u64, exp: u32) -> Rational {
    Rational::new(BigInt::one(), BigInt::from(base).pow(exp))
}

/// Relative difference `|a-b| / max(|a|,|b|)`, zero when both vanish.
pub fn rel_diff<S: Scalar>(a: &S, b: &S) -> f64 {
    let (a, b) = (a.to_f64(), b.to_f64());
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Equality in exact mode; relative closeness (with a 1e-15 absolute floor) in
/// float mode.
pub fn close<S: Scalar>(a: &S, b: &S, rel_tol: f64) -> bool {
    if S::is_exact() {
        return a == b;
    }
    let diff = (a.to_f64() - b.to_f64()).abs();
    diff <= 1e-15 || rel_diff(a, b) <= rel_tol
}

pub(crate) fn max_of<S: Scalar>(a: S, b: S) -> S {
    if b > a {
        b
    } else {
        a
    }
}

pub(crate) fn min_of<S: Scalar>(a: S, b: S) -> S {
    if b < a {
        b
    } else {
        a
    }
}

/// Converts an unsigned count into any scalar.
pub(crate) fn from_usize<S: Scalar>(n: usize) -> S {
    S::from_rational(&Rational::from_integer(
        BigInt::from_usize(n).expect("usize fits"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rational("3/8").unwrap(), ratio(3, 8));
        assert_eq!(parse_rational("-2").unwrap(), ratio(-2, 1));
        assert_eq!(parse_rational("0.125").unwrap(), ratio(1, 8));
        assert_eq!(parse_rational("-.5").unwrap(), ratio(-1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1e-3").is_err());
    }

    #[test]
    fn render_round_trips() {
        for q in [ratio(3, 8), ratio(-7, 1), ratio(0, 1)] {
            assert_eq!(Rational::parse_str(&q.render()).unwrap(), q);
        }
        let x = 0.1f64 + 0.2;
        assert_eq!(f64::parse_str(&x.render()).unwrap(), x);
    }

    #[test]
    fn exact_powers() {
        assert_eq!(ratio(1, 4).pow_rational(&ratio(1, 2)), Some(ratio(1, 2)));
        assert_eq!(ratio(8, 27).pow_rational(&ratio(2, 3)), Some(ratio(4, 9)));
        assert_eq!(ratio(1, 2).pow_rational(&ratio(1, 2)), None);
        assert_eq!(ratio(5, 3).pow_rational(&ratio(1, 1)), Some(ratio(5, 3)));
        let x = 0.25f64.pow_rational(&ratio(1, 2)).unwrap();
        assert!((x - 0.5).abs() < 1e-15);
    }

    #[test]
    fn closeness() {
        assert!(close(&1.0, &(1.0 + 1e-12), 1e-9));
        assert!(!close(&1.0, &1.001, 1e-9));
        assert!(close(&0.0, &1e-16, 1e-9));
        assert!(!close(&ratio(1, 3), &ratio(1, 3 + 1), 1.0));
    }
}

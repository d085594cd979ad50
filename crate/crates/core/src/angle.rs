//! Angles on the circle `T = R/Z`, carried as a binary float together with an
//! optional exact form (a rational or a real quadratic surd).
//!
//! Exact forms let the coding decide boundary cases such as `{θ + kα} = α`
//! without guessing. Quadratic surds cover the usual catalog of irrational
//! rotation numbers (golden-mean family, `√2 − 1`, ...).

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::AngleError;

/// `(a + b·√d) / c` with `c > 0` and `d > 1` square-free when `b != 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadSurd {
    pub a: i64,
    pub b: i64,
    pub d: i64,
    pub c: i64,
}

impl QuadSurd {
    pub fn rational(p: i64, q: i64) -> Self {
        let (p, q) = if q < 0 { (-p, -q) } else { (p, q) };
        let g = gcd(p.abs(), q).max(1);
        QuadSurd { a: p / g, b: 0, d: 0, c: q / g }
    }

    pub fn new(a: i64, b: i64, d: i64, c: i64) -> Self {
        assert!(c != 0, "zero denominator");
        let (a, b, c) = if c < 0 { (-a, -b, -c) } else { (a, b, c) };
        if b == 0 {
            return Self::rational(a, c);
        }
        let g = gcd(gcd(a.abs(), b.abs()), c).max(1);
        QuadSurd { a: a / g, b: b / g, d, c: c / g }
    }

    pub fn is_rational(&self) -> bool {
        self.b == 0
    }

    pub fn to_f64(&self) -> f64 {
        (self.a as f64 + self.b as f64 * (self.d as f64).sqrt()) / self.c as f64
    }

    fn compatible(&self, other: &Self) -> bool {
        self.b == 0 || other.b == 0 || self.d == other.d
    }

    /// Sum, if both live in the same quadratic field.
    pub fn checked_add(&self, other: &Self) -> Option<Self> {
        if !self.compatible(other) {
            return None;
        }
        let d = if self.b != 0 { self.d } else { other.d };
        let a = self.a.checked_mul(other.c)?.checked_add(other.a.checked_mul(self.c)?)?;
        let b = self.b.checked_mul(other.c)?.checked_add(other.b.checked_mul(self.c)?)?;
        let c = self.c.checked_mul(other.c)?;
        Some(QuadSurd::new(a, b, d, c))
    }

    pub fn checked_scale(&self, k: i64) -> Option<Self> {
        Some(QuadSurd::new(self.a.checked_mul(k)?, self.b.checked_mul(k)?, self.d, self.c))
    }

    pub fn neg(&self) -> Self {
        QuadSurd::new(-self.a, -self.b, self.d, self.c)
    }

    pub fn signum(&self) -> Ordering {
        let a = self.a as i128;
        let b = self.b as i128;
        if b == 0 {
            return a.cmp(&0);
        }
        let sq = a * a;
        let sd = b * b * self.d as i128;
        match (a >= 0, b > 0) {
            (true, true) => Ordering::Greater,
            (false, false) => Ordering::Less,
            (true, false) => sq.cmp(&sd),
            (false, true) => sd.cmp(&sq),
        }
    }

    pub fn floor(&self) -> i64 {
        let mut n = self.to_f64().floor() as i64;
        loop {
            let below = self.checked_add(&QuadSurd::rational(-n, 1)).expect("floor overflow");
            if below.signum() == Ordering::Less {
                n -= 1;
                continue;
            }
            let above = self.checked_add(&QuadSurd::rational(-(n + 1), 1)).expect("floor overflow");
            if above.signum() != Ordering::Less {
                n += 1;
                continue;
            }
            return n;
        }
    }

    pub fn to_big_rational(&self) -> Option<BigRational> {
        if self.b != 0 {
            return None;
        }
        Some(BigRational::new(BigInt::from(self.a), BigInt::from(self.c)))
    }
}

impl fmt::Display for QuadSurd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b == 0 {
            write!(f, "{}/{}", self.a, self.c)
        } else {
            write!(f, "surd:{},{},{},{}", self.a, self.b, self.d, self.c)
        }
    }
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.abs()
}

/// A point of the circle, or a real lift of one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Angle {
    value: f64,
    exact: Option<QuadSurd>,
}

impl Angle {
    pub fn from_f64(value: f64) -> Self {
        Angle { value, exact: None }
    }

    pub fn rational(p: i64, q: i64) -> Self {
        let s = QuadSurd::rational(p, q);
        Angle { value: s.to_f64(), exact: Some(s) }
    }

    pub fn surd(s: QuadSurd) -> Self {
        Angle { value: s.to_f64(), exact: Some(s) }
    }

    pub fn zero() -> Self {
        Angle::rational(0, 1)
    }

    /// `(3 − √5)/2`, the golden-mean rotation number in `(0, 1/2)`.
    pub fn golden() -> Self {
        Angle::surd(QuadSurd::new(3, -1, 5, 2))
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn exact(&self) -> Option<&QuadSurd> {
        self.exact.as_ref()
    }

    pub fn is_exact_irrational(&self) -> bool {
        matches!(self.exact, Some(s) if !s.is_rational())
    }

    /// `1 − α`, i.e. the rotation number read with the opposite orientation.
    pub fn complement(&self) -> Self {
        match self.exact {
            Some(s) => Angle::surd(s.neg().checked_add(&QuadSurd::rational(1, 1)).expect("overflow")),
            None => Angle::from_f64(1.0 - self.value),
        }
    }

    /// Reduction to `[0, 1)` when exact, plain `rem_euclid` otherwise.
    pub fn frac(&self) -> Self {
        match self.exact {
            Some(s) => {
                let n = s.floor();
                Angle::surd(s.checked_add(&QuadSurd::rational(-n, 1)).expect("overflow"))
            }
            None => Angle::from_f64(self.value.rem_euclid(1.0)),
        }
    }

    /// Rational approximation by continued-fraction convergents, when one with
    /// denominator `≤ max_den` lies within `tol`; used to reject periodic codings.
    pub fn rational_approximation(&self, max_den: i64, tol: f64) -> Option<(i64, i64)> {
        if let Some(s) = self.exact {
            if s.is_rational() {
                return (s.c <= max_den).then_some((s.a, s.c));
            }
            return None;
        }
        convergents(self.value, 64)
            .into_iter()
            .take_while(|&(_, q)| q <= max_den)
            .find(|&(p, q)| (self.value - p as f64 / q as f64).abs() <= tol)
    }

    pub fn looks_rational(&self) -> bool {
        self.rational_approximation(1_000_000, 1e-14).is_some()
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.exact {
            Some(s) => write!(f, "{s}"),
            None => write!(f, "{}", self.value),
        }
    }
}

impl FromStr for Angle {
    type Err = AngleError;

    /// Accepted forms: catalog names (`golden`, `3-sqrt5-over-2`,
    /// `sqrt5-minus-1-over-2`, `sqrt2-minus-1`), `p/q`,
    /// `surd:a,b,d,c` for `(a + b√d)/c`, an integer (exact), or a decimal literal.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        match t {
            "golden" | "3-sqrt5-over-2" => return Ok(Angle::golden()),
            "sqrt5-minus-1-over-2" | "inverse-golden" => {
                return Ok(Angle::surd(QuadSurd::new(-1, 1, 5, 2)))
            }
            "sqrt2-minus-1" => return Ok(Angle::surd(QuadSurd::new(-1, 1, 2, 1))),
            _ => {}
        }
        if let Some(rest) = t.strip_prefix("surd:") {
            let parts: Vec<i64> = rest
                .split(',')
                .map(|p| p.trim().parse::<i64>())
                .collect::<Result<_, _>>()
                .map_err(|_| AngleError::Parse(s.to_string()))?;
            if parts.len() != 4 || parts[3] == 0 || (parts[1] != 0 && parts[2] <= 1) {
                return Err(AngleError::Parse(s.to_string()));
            }
            return Ok(Angle::surd(QuadSurd::new(parts[0], parts[1], parts[2], parts[3])));
        }
        if let Some((p, q)) = t.split_once('/') {
            let p: i64 = p.trim().parse().map_err(|_| AngleError::Parse(s.to_string()))?;
            let q: i64 = q.trim().parse().map_err(|_| AngleError::Parse(s.to_string()))?;
            if q == 0 {
                return Err(AngleError::Parse(s.to_string()));
            }
            return Ok(Angle::rational(p, q));
        }
        if let Ok(n) = t.parse::<i64>() {
            return Ok(Angle::rational(n, 1));
        }
        t.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(Angle::from_f64)
            .ok_or_else(|| AngleError::Parse(s.to_string()))
    }
}

/// Continued-fraction convergents `p_k/q_k` of a real number.
pub fn convergents(x: f64, max_terms: usize) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    let (mut p0, mut q0, mut p1, mut q1) = (0i64, 1i64, 1i64, 0i64);
    let mut r = x;
    for _ in 0..max_terms {
        let a = r.floor();
        if !a.is_finite() || a.abs() > 1e12 {
            break;
        }
        let a = a as i64;
        let (Some(p2), Some(q2)) = (
            a.checked_mul(p1).and_then(|v| v.checked_add(p0)),
            a.checked_mul(q1).and_then(|v| v.checked_add(q0)),
        ) else {
            break;
        };
        out.push((p2, q2));
        let f = r - a as f64;
        if f.abs() < 1e-15 || q2 > 1_000_000_000_000 {
            break;
        }
        r = 1.0 / f;
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
    }
    out
}

/// Exact value used when the floating fast path cannot separate two angles.
#[derive(Clone, Debug)]
pub(crate) enum ExactValue {
    Surd(QuadSurd),
    Dyadic(BigRational),
}

impl Angle {
    pub(crate) fn exact_value(&self) -> ExactValue {
        match self.exact {
            Some(s) if !s.is_rational() => ExactValue::Surd(s),
            Some(s) => ExactValue::Dyadic(s.to_big_rational().expect("rational")),
            None => ExactValue::Dyadic(BigRational::from_float(self.value).expect("finite angle")),
        }
    }
}

/// Decide whether `{θ + kα} < α` exactly. `None` when the operands do not
/// share an exact arithmetic (an irrational surd mixed with a bare float or a
/// different quadratic field).
pub(crate) fn exact_frac_below_alpha(alpha: &Angle, theta: &Angle, k: i64) -> Option<bool> {
    match (alpha.exact_value(), theta.exact_value()) {
        (ExactValue::Dyadic(a), ExactValue::Dyadic(t)) => {
            let y = t + a.clone() * BigRational::from_integer(BigInt::from(k));
            let frac = y.clone() - y.floor();
            Some(frac < a)
        }
        (av, tv) => {
            // A bare float next to an irrational surd is an approximation of
            // some unknown real; its dyadic value would decide the wrong question.
            if alpha.exact.is_none() || theta.exact.is_none() {
                return None;
            }
            let a = surd_of(&av)?;
            let t = surd_of(&tv)?;
            let y = t.checked_add(&a.checked_scale(k)?)?;
            let n = y.floor();
            let frac = y.checked_add(&QuadSurd::rational(-n, 1))?;
            Some(frac.checked_add(&a.neg())?.signum() == Ordering::Less)
        }
    }
}

fn surd_of(v: &ExactValue) -> Option<QuadSurd> {
    match v {
        ExactValue::Surd(s) => Some(*s),
        ExactValue::Dyadic(r) => {
            let p = r.numer().to_i64()?;
            let q = r.denom().to_i64()?;
            Some(QuadSurd::rational(p, q))
        }
    }
}

/// Exact rational `p/q` used for Farey bounds and shift distances.
pub type Rational = Ratio<i64>;

pub(crate) fn rational_to_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn surd_sign_and_floor() {
        let g = QuadSurd::new(3, -1, 5, 2);
        assert_eq!(g.signum(), Ordering::Greater);
        assert_eq!(g.floor(), 0);
        assert_eq!(g.checked_scale(3).unwrap().floor(), 1);
        assert_eq!(g.checked_scale(-1).unwrap().floor(), -1);
        let s = QuadSurd::new(0, 1, 2, 1).checked_add(&QuadSurd::rational(-1, 1)).unwrap();
        assert!((s.to_f64() - (2f64.sqrt() - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn parse_catalog_and_forms() {
        let zero: Angle = "0".parse().unwrap();
        assert!(zero.exact().is_some_and(|e| e.is_rational()));
        let g: Angle = "3-sqrt5-over-2".parse().unwrap();
        assert!((g.value() - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-16);
        let r: Angle = "2/6".parse().unwrap();
        assert_eq!(r.exact().unwrap(), &QuadSurd::rational(1, 3));
        assert!("1/0".parse::<Angle>().is_err());
        assert!("nope".parse::<Angle>().is_err());
        let f: Angle = "0.25".parse().unwrap();
        assert_eq!(f.value(), 0.25);
    }

    #[test]
    fn golden_convergents_are_fibonacci_ratios() {
        let cs = convergents(Angle::golden().value(), 12);
        assert_eq!(&cs[..6], &[(0, 1), (1, 2), (1, 3), (2, 5), (3, 8), (5, 13)]);
    }

    #[test]
    fn rational_detection() {
        assert!(Angle::from_f64(0.375).looks_rational());
        assert!(!Angle::golden().looks_rational());
        assert!(Angle::rational(1, 7).looks_rational());
    }

    #[test]
    fn exact_boundary_decisions() {
        let a = Angle::golden();
        // {0} = 0 < α and {α} = α is not < α.
        assert_eq!(exact_frac_below_alpha(&a, &Angle::zero(), 0), Some(true));
        assert_eq!(exact_frac_below_alpha(&a, &Angle::zero(), 1), Some(false));
        let f = Angle::from_f64(0.3);
        assert_eq!(exact_frac_below_alpha(&f, &Angle::zero(), 1), Some(false));
        assert_eq!(exact_frac_below_alpha(&a, &Angle::from_f64(0.1), 1), None);
    }
}

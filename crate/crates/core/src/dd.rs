//! Double-double arithmetic: an unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`,
//! giving about 32 significant digits. Only what the orbit shooting needs.

use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

pub const TWO_PI: Dd = Dd { hi: 6.283_185_307_179_586, lo: 2.449_293_598_294_706_4e-16 };

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub fn new(v: f64) -> Dd {
        Dd { hi: v, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Dd {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    /// Nearest integer, as an exact double.
    pub fn round(self) -> f64 {
        let r = self.hi.round();
        if r == self.hi {
            // hi is already integral; lo decides ties and carries.
            r + self.lo.round()
        } else if (r - self.hi).abs() == 0.5 {
            (self.hi + self.lo.signum() * 0.25).round()
        } else {
            r
        }
    }

    pub fn sqr(self) -> Dd {
        self * self
    }

    /// `sin(2π x)`, reduced to `|x| ≤ 1/4` before the Taylor series.
    pub fn sin_2pi(self) -> Dd {
        let mut r = self - Dd::new(self.round());
        if r.hi > 0.25 {
            r = Dd::new(0.5) - r;
        } else if r.hi < -0.25 {
            r = Dd::new(-0.5) - r;
        }
        let t = r * TWO_PI;
        let t2 = t * t;
        let mut term = t;
        let mut sum = t;
        let mut n = 1.0;
        loop {
            term = term * t2 / Dd::new(-(n + 1.0) * (n + 2.0));
            n += 2.0;
            sum = sum + term;
            if term.hi.abs() < 1e-34 || n > 61.0 {
                break;
            }
        }
        sum
    }
}

impl From<f64> for Dd {
    fn from(v: f64) -> Dd {
        Dd::new(v)
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Mul<f64> for Dd {
    type Output = Dd;
    fn mul(self, o: f64) -> Dd {
        let (p, e) = two_prod(self.hi, o);
        let (hi, lo) = quick_two_sum(p, e + self.lo * o);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * q1;
        let q2 = r.hi / o.hi;
        let r = r - o * q2;
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::new(q3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sums_keep_the_low_word() {
        let a = Dd::new(1.0) + Dd::new(1e-20);
        assert_eq!(a.hi, 1.0);
        assert!((a.lo - 1e-20).abs() < 1e-36);
        let b = a - Dd::new(1.0);
        assert!((b.to_f64() - 1e-20).abs() < 1e-36);
    }

    #[test]
    fn division_inverts_multiplication() {
        let a = Dd::new(1.0) / Dd::new(3.0);
        let back = a * Dd::new(3.0) - Dd::new(1.0);
        assert!(back.to_f64().abs() < 1e-31);
    }

    #[test]
    fn sine_matches_f64_and_symmetries() {
        for i in -40..=40 {
            let x = i as f64 * 0.0371 + 0.013;
            let s = Dd::new(x).sin_2pi();
            assert!((s.to_f64() - (2.0 * std::f64::consts::PI * x).sin()).abs() < 1e-14);
        }
        // sin(2π·(1/2 + ε)) = −sin(2πε) to full double-double accuracy.
        let eps = 1e-20;
        let v = (Dd::new(0.5) + Dd::new(eps)).sin_2pi();
        let expected = -(TWO_PI * eps);
        assert!((v - expected).to_f64().abs() < 1e-34);
        // sin(π/3)² = 3/4
        let w = (Dd::new(1.0) / Dd::new(6.0)).sin_2pi();
        assert!((w.sqr() - Dd::new(0.75)).to_f64().abs() < 1e-30);
    }
}

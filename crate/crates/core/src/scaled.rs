//! Complex numbers carried as `mant * exp(e)` so that q-integers like `[7.3 * 400]_q`
//! stay representable when `|q| < 1`.

use crate::C64;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sc {
    pub mant: C64,
    pub e: f64,
}

impl Sc {
    pub const ZERO: Sc = Sc { mant: C64::new(0.0, 0.0), e: 0.0 };
    pub const ONE: Sc = Sc { mant: C64::new(1.0, 0.0), e: 0.0 };

    pub fn new(v: C64) -> Self {
        Sc { mant: v, e: 0.0 }.normalized()
    }

    /// `exp(lg)` without ever forming the exponential of the real part.
    pub fn from_log(lg: C64) -> Self {
        Sc { mant: C64::from_polar(1.0, lg.im), e: lg.re }
    }

    pub fn is_zero(&self) -> bool {
        self.mant == C64::new(0.0, 0.0)
    }

    /// `ln |value|`, `-inf` for zero.
    pub fn ln_abs(&self) -> f64 {
        if self.is_zero() {
            f64::NEG_INFINITY
        } else {
            self.mant.norm().ln() + self.e
        }
    }

    /// The plain value; under/overflows to `0`/`inf` only here.
    pub fn value(&self) -> C64 {
        if self.is_zero() {
            return self.mant;
        }
        self.mant * self.e.exp()
    }

    fn normalized(self) -> Self {
        let n = self.mant.norm();
        if n == 0.0 || !n.is_finite() {
            return Sc { mant: self.mant, e: if n == 0.0 { 0.0 } else { self.e } };
        }
        let l = n.ln();
        Sc { mant: self.mant / n, e: self.e + l }
    }
}

impl From<f64> for Sc {
    fn from(x: f64) -> Self {
        Sc::new(C64::new(x, 0.0))
    }
}

impl Mul for Sc {
    type Output = Sc;
    fn mul(self, o: Sc) -> Sc {
        if self.is_zero() || o.is_zero() {
            return Sc::ZERO;
        }
        Sc { mant: self.mant * o.mant, e: self.e + o.e }.normalized()
    }
}

impl Div for Sc {
    type Output = Sc;
    fn div(self, o: Sc) -> Sc {
        if self.is_zero() {
            return Sc::ZERO;
        }
        Sc { mant: self.mant / o.mant, e: self.e - o.e }.normalized()
    }
}

impl Neg for Sc {
    type Output = Sc;
    fn neg(self) -> Sc {
        Sc { mant: -self.mant, e: self.e }
    }
}

impl Add for Sc {
    type Output = Sc;
    fn add(self, o: Sc) -> Sc {
        if self.is_zero() {
            return o;
        }
        if o.is_zero() {
            return self;
        }
        let (big, small) = if self.e >= o.e { (self, o) } else { (o, self) };
        let m = big.mant + small.mant * (small.e - big.e).exp();
        Sc { mant: m, e: big.e }.normalized()
    }
}

impl Sub for Sc {
    type Output = Sc;
    fn sub(self, o: Sc) -> Sc {
        self + (-o)
    }
}

/// `[x]_q = (q^x - q^{-x}) / (q - q^{-1})` in scaled form; `lnq` is the principal log of `q`.
pub fn qint_sc(x: f64, lnq: C64) -> Sc {
    if x == 0.0 {
        return Sc::ZERO;
    }
    let q = lnq.exp();
    let den = q - q.inv();
    let a = lnq * x;
    // Factor out the larger of q^{x}, q^{-x}.
    let (lead, rest) = if a.re <= 0.0 {
        (-a, (a * 2.0).exp() - 1.0)
    } else {
        (a, C64::new(1.0, 0.0) - (-a * 2.0).exp())
    };
    Sc::from_log(lead) * Sc::new(rest / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plain_qint(x: f64, q: f64) -> f64 {
        (q.powf(x) - q.powf(-x)) / (q - 1.0 / q)
    }

    #[test]
    fn arithmetic_roundtrip() {
        let a = Sc::new(C64::new(3.0, -1.0));
        let b = Sc::new(C64::new(-0.5, 2.0));
        assert!(((a * b).value() - C64::new(3.0, -1.0) * C64::new(-0.5, 2.0)).norm() < 1e-14);
        assert!(((a / b).value() - C64::new(3.0, -1.0) / C64::new(-0.5, 2.0)).norm() < 1e-14);
        assert!(((a + b).value() - C64::new(2.5, 1.0)).norm() < 1e-14);
        assert!(((a - a).value()).norm() < 1e-15);
        assert_eq!((Sc::ZERO * a).value(), C64::new(0.0, 0.0));
    }

    #[test]
    fn qint_matches_direct_formula() {
        let lnq = C64::new(0.5f64.ln(), 0.0);
        for x in [1.0, -2.0, 7.3, 14.6, -20.5] {
            let got = qint_sc(x, lnq).value().re;
            let want = plain_qint(x, 0.5);
            assert!((got / want - 1.0).abs() < 1e-13, "{x}: {got} {want}");
        }
    }

    #[test]
    fn huge_qints_stay_finite_in_ratio() {
        let lnq = C64::new(0.5f64.ln(), 0.0);
        let a = qint_sc(7.3 * 400.0, lnq);
        let b = qint_sc(6.3 * 400.0, lnq);
        assert!(a.value().re.is_infinite());
        // [7.3m]/[6.3m] ~ q^{-m}
        let ratio = (a / b).ln_abs();
        assert!((ratio - 400.0 * 2f64.ln()).abs() < 1e-9);
    }
}

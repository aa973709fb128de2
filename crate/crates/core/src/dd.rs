// Copyright 2026 ddopt Contributors
// SPDX-License-Identifier: Apache-2.0

//! Minimal double-double arithmetic.
//!
//! Only what the low-frequency filter expansion and extended-precision UDD
//! timings need: exact sums and products of `f64` pairs, division by an
//! `f64`, and a Taylor-series sine on `[0, π/2]`. A value is `hi + lo` with
//! `|lo| <= ulp(hi) / 2`.

use std::ops::{Add, Mul, Neg, Sub};

/// An unevaluated sum `hi + lo` carrying roughly 106 bits of mantissa.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

/// π to double-double precision.
pub const PI: Dd = Dd {
    hi: std::f64::consts::PI,
    lo: 1.224_646_799_147_353_2e-16,
};

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
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
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn new(hi: f64, lo: f64) -> Self {
        let (hi, lo) = quick_two_sum(hi, lo);
        Dd { hi, lo }
    }

    pub fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn mul_f64(self, b: f64) -> Dd {
        let (p, e) = two_prod(self.hi, b);
        let e = e + self.lo * b;
        Dd::new(p, e)
    }

    pub fn div_f64(self, b: f64) -> Dd {
        let q1 = self.hi / b;
        let r = self - Dd::from_f64(b).mul_f64(q1);
        let q2 = r.hi / b;
        let r = r - Dd::from_f64(b).mul_f64(q2);
        let q3 = r.hi / b;
        Dd::new(q1, q2) + Dd::from_f64(q3)
    }

    /// Sine by Taylor series. Accurate to double-double precision for
    /// `0 <= x <= π/2`; callers reduce the argument themselves.
    pub fn sin(self) -> Dd {
        let x2 = self * self;
        let mut term = self;
        let mut sum = self;
        let mut k = 1.0;
        loop {
            term = -(term * x2).div_f64((2.0 * k) * (2.0 * k + 1.0));
            sum = sum + term;
            if term.hi.abs() < 1e-34 * sum.hi.abs().max(f64::MIN_POSITIVE) || k > 60.0 {
                break;
            }
            k += 1.0;
        }
        sum
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        Dd::new(p, e)
    }
}

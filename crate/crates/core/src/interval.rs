//! Closed-interval arithmetic with outward rounding.
//!
//! Every operation returns an interval that contains the exact real result
//! for all choices of operands in the inputs. Endpoint computations detect
//! their own rounding error (two-sum for addition, FMA residual for
//! multiplication) and widen by one ulp only when the computed endpoint is
//! inexact, so integer-exact cases like `[1,2] + [3,4]` stay sharp.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Sum rounded toward negative infinity.
fn add_down(a: f64, b: f64) -> f64 {
    let s = a + b;
    if s.is_infinite() {
        return if s < 0.0 { s } else { f64::MAX };
    }
    // two-sum residual: exact error of the rounded sum
    let bv = s - a;
    let err = (a - (s - bv)) + (b - bv);
    if err < 0.0 {
        s.next_down()
    } else {
        s
    }
}

/// Sum rounded toward positive infinity.
fn add_up(a: f64, b: f64) -> f64 {
    let s = a + b;
    if s.is_infinite() {
        return if s > 0.0 { s } else { f64::MIN };
    }
    let bv = s - a;
    let err = (a - (s - bv)) + (b - bv);
    if err > 0.0 {
        s.next_up()
    } else {
        s
    }
}

/// Product rounded toward negative infinity.
fn mul_down(a: f64, b: f64) -> f64 {
    let p = a * b;
    if p.is_infinite() {
        return if p < 0.0 { p } else { f64::MAX };
    }
    let err = a.mul_add(b, -p);
    if err < 0.0 {
        p.next_down()
    } else {
        p
    }
}

/// Product rounded toward positive infinity.
fn mul_up(a: f64, b: f64) -> f64 {
    let p = a * b;
    if p.is_infinite() {
        return if p > 0.0 { p } else { f64::MIN };
    }
    let err = a.mul_add(b, -p);
    if err > 0.0 {
        p.next_up()
    } else {
        p
    }
}

/// x^n rounded down, for x >= 0. All factors are non-negative, so rounding
/// each partial product down keeps a valid lower bound.
fn pow_down_nonneg(x: f64, n: u32) -> f64 {
    debug_assert!(x >= 0.0);
    let mut acc = 1.0;
    for _ in 0..n {
        acc = mul_down(acc, x);
    }
    acc
}

/// x^n rounded up, for x >= 0.
fn pow_up_nonneg(x: f64, n: u32) -> f64 {
    debug_assert!(x >= 0.0);
    let mut acc = 1.0;
    for _ in 0..n {
        acc = mul_up(acc, x);
    }
    acc
}

/// A closed interval `[lo, hi]` of reals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "invalid interval: [{lo}, {hi}]");
        Self { lo, hi }
    }

    /// Degenerate interval `[x, x]`.
    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn zero() -> Self {
        Self::point(0.0)
    }

    /// Symmetric interval `[-r, r]`.
    pub fn symmetric(r: f64) -> Self {
        debug_assert!(r >= 0.0);
        Self { lo: -r, hi: r }
    }

    pub fn width(&self) -> f64 {
        add_up(self.hi, -self.lo)
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Largest absolute value attained on the interval.
    pub fn magnitude(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn intersects(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// Smallest interval containing both inputs.
    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    /// Scale by a point value; endpoint order flips when `c < 0`.
    pub fn scale(&self, c: f64) -> Interval {
        if c >= 0.0 {
            Interval {
                lo: mul_down(c, self.lo),
                hi: mul_up(c, self.hi),
            }
        } else {
            Interval {
                lo: mul_down(c, self.hi),
                hi: mul_up(c, self.lo),
            }
        }
    }

    /// `{x^n | x in self}`. Even powers of sign-crossing intervals get the
    /// sharp lower endpoint 0 rather than the product-form bound.
    pub fn pow(&self, n: u32) -> Interval {
        match n {
            0 => Interval::point(1.0),
            1 => *self,
            _ if n % 2 == 0 => {
                if self.lo >= 0.0 {
                    Interval::new(pow_down_nonneg(self.lo, n), pow_up_nonneg(self.hi, n))
                } else if self.hi <= 0.0 {
                    Interval::new(pow_down_nonneg(-self.hi, n), pow_up_nonneg(-self.lo, n))
                } else {
                    Interval::new(0.0, pow_up_nonneg(self.magnitude(), n))
                }
            }
            _ => {
                // odd: monotone increasing
                let lo = if self.lo >= 0.0 {
                    pow_down_nonneg(self.lo, n)
                } else {
                    -pow_up_nonneg(-self.lo, n)
                };
                let hi = if self.hi >= 0.0 {
                    pow_up_nonneg(self.hi, n)
                } else {
                    -pow_down_nonneg(-self.hi, n)
                };
                Interval::new(lo, hi)
            }
        }
    }

    /// Widen both endpoints outward by `r`.
    pub fn inflate(&self, r: f64) -> Interval {
        debug_assert!(r >= 0.0);
        Interval {
            lo: add_down(self.lo, -r),
            hi: add_up(self.hi, r),
        }
    }
}

impl Add for Interval {
    type Output = Interval;

    fn add(self, rhs: Interval) -> Interval {
        Interval {
            lo: add_down(self.lo, rhs.lo),
            hi: add_up(self.hi, rhs.hi),
        }
    }
}

impl Sub for Interval {
    type Output = Interval;

    fn sub(self, rhs: Interval) -> Interval {
        Interval {
            lo: add_down(self.lo, -rhs.hi),
            hi: add_up(self.hi, -rhs.lo),
        }
    }
}

impl Mul for Interval {
    type Output = Interval;

    fn mul(self, rhs: Interval) -> Interval {
        let lo = mul_down(self.lo, rhs.lo)
            .min(mul_down(self.lo, rhs.hi))
            .min(mul_down(self.hi, rhs.lo))
            .min(mul_down(self.hi, rhs.hi));
        let hi = mul_up(self.lo, rhs.lo)
            .max(mul_up(self.lo, rhs.hi))
            .max(mul_up(self.hi, rhs.lo))
            .max(mul_up(self.hi, rhs.hi));
        Interval { lo, hi }
    }
}

impl Neg for Interval {
    type Output = Interval;

    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

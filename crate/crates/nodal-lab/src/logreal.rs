//! Log-domain representation of nonnegative magnitudes.
//!
//! Quantities in the explicit-constants chain range from `exp(-exp(257 n^{3/2}))`
//! up to `exp(127 n^{3/2})`; only the natural log survives in `f64`. Zero is
//! encoded as `ln = -inf`.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::ops::{Add, Div, Mul};

/// A nonnegative real stored as its natural logarithm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogReal {
    ln: f64,
}

impl LogReal {
    pub const ZERO: LogReal = LogReal { ln: f64::NEG_INFINITY };
    pub const ONE: LogReal = LogReal { ln: 0.0 };

    /// From an ordinary nonnegative value. Panics on negative or NaN input.
    pub fn from_value(v: f64) -> Self {
        assert!(v >= 0.0, "LogReal::from_value on negative input {v}");
        LogReal { ln: v.ln() }
    }

    /// From a natural logarithm (`-inf` encodes zero).
    pub fn from_ln(ln: f64) -> Self {
        assert!(!ln.is_nan(), "LogReal::from_ln on NaN");
        LogReal { ln }
    }

    pub fn ln(self) -> f64 {
        self.ln
    }

    pub fn log10(self) -> f64 {
        self.ln / std::f64::consts::LN_10
    }

    /// The plain value; underflows to 0 and overflows to inf outside f64 range.
    pub fn value(self) -> f64 {
        self.ln.exp()
    }

    pub fn is_zero(self) -> bool {
        self.ln == f64::NEG_INFINITY
    }

    pub fn powi(self, k: i32) -> Self {
        if self.is_zero() && k == 0 {
            return LogReal::ONE;
        }
        LogReal { ln: self.ln * k as f64 }
    }

    pub fn powf(self, p: f64) -> Self {
        if self.is_zero() && p == 0.0 {
            return LogReal::ONE;
        }
        LogReal { ln: self.ln * p }
    }

    pub fn sqrt(self) -> Self {
        LogReal { ln: self.ln * 0.5 }
    }

    pub fn recip(self) -> Self {
        LogReal { ln: -self.ln }
    }

    pub fn max(self, other: Self) -> Self {
        if self.ln >= other.ln {
            self
        } else {
            other
        }
    }

    pub fn min(self, other: Self) -> Self {
        if self.ln <= other.ln {
            self
        } else {
            other
        }
    }
}

impl Add for LogReal {
    type Output = LogReal;

    /// log-sum-exp; exact to ~1 ulp of the log representation.
    fn add(self, rhs: LogReal) -> LogReal {
        let (hi, lo) = if self.ln >= rhs.ln { (self.ln, rhs.ln) } else { (rhs.ln, self.ln) };
        if hi == f64::NEG_INFINITY {
            return LogReal::ZERO;
        }
        if hi == f64::INFINITY || lo == f64::NEG_INFINITY {
            return LogReal { ln: hi };
        }
        LogReal { ln: hi + (lo - hi).exp().ln_1p() }
    }
}

impl Mul for LogReal {
    type Output = LogReal;

    fn mul(self, rhs: LogReal) -> LogReal {
        if self.is_zero() || rhs.is_zero() {
            return LogReal::ZERO;
        }
        LogReal { ln: self.ln + rhs.ln }
    }
}

impl Div for LogReal {
    type Output = LogReal;

    fn div(self, rhs: LogReal) -> LogReal {
        if self.is_zero() {
            return LogReal::ZERO;
        }
        LogReal { ln: self.ln - rhs.ln }
    }
}

impl PartialOrd for LogReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.ln.partial_cmp(&other.ln)
    }
}

impl std::iter::Sum for LogReal {
    fn sum<I: Iterator<Item = LogReal>>(iter: I) -> LogReal {
        iter.fold(LogReal::ZERO, |a, b| a + b)
    }
}

/// Serialized form used across the CLI outputs: `{"log10": ...}`.
#[derive(Serialize, Deserialize)]
struct LogRealRepr {
    log10: f64,
}

impl Serialize for LogReal {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        LogRealRepr { log10: self.log10() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LogReal {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = LogRealRepr::deserialize(d)?;
        Ok(LogReal::from_ln(r.log10 * std::f64::consts::LN_10))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_and_one() {
        assert!(LogReal::ZERO.is_zero());
        assert_eq!(LogReal::ONE.value(), 1.0);
        assert_eq!((LogReal::ZERO + LogReal::ONE).value(), 1.0);
        assert!((LogReal::ZERO * LogReal::from_value(7.0)).is_zero());
    }

    #[test]
    fn extreme_magnitudes_survive() {
        // exp(-exp(600)) has no f64 value but a finite log-domain product chain.
        let tiny = LogReal::from_ln(-(600f64.exp()));
        let scaled = tiny * LogReal::from_value(1e300);
        assert!(scaled.ln() < -1e260 && scaled.ln().is_finite());
        assert_eq!(scaled.value(), 0.0);
        let big = LogReal::from_ln(1866.0); // exp(127 * 6^{3/2})-scale
        assert!((big * big).ln() == 3732.0);
    }

    proptest! {
        #[test]
        fn add_commutes(a in 1e-12f64..1e12, b in 1e-12f64..1e12) {
            let (x, y) = (LogReal::from_value(a), LogReal::from_value(b));
            prop_assert!(((x + y).ln() - (y + x).ln()).abs() <= 1e-15 * (x + y).ln().abs().max(1.0));
            prop_assert!((x + y).value() >= x.value());
        }

        #[test]
        fn mul_matches_plain(a in 1e-6f64..1e6, b in 1e-6f64..1e6) {
            let p = (LogReal::from_value(a) * LogReal::from_value(b)).value();
            prop_assert!((p - a * b).abs() <= 1e-9 * (a * b));
        }
    }
}

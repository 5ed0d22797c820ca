//! Log-domain arithmetic.
//!
//! Positive quantities are stored as natural logarithms; `-inf` encodes zero.
//! Every reduction shifts by the running maximum before exponentiating.

use crate::error::{Error, Result};
use std::fmt;

/// Natural logarithm of a nonnegative quantity. Never NaN.
#[derive(Clone, Copy, PartialEq, PartialOrd, Default)]
#[repr(transparent)]
pub struct LogValue(f64);

impl LogValue {
    pub const ZERO: LogValue = LogValue(f64::NEG_INFINITY);
    pub const ONE: LogValue = LogValue(0.0);

    /// Wraps a log value. Panics on NaN.
    pub fn new(log: f64) -> Self {
        assert!(!log.is_nan(), "LogValue cannot hold NaN");
        LogValue(log)
    }

    /// Log of a nonnegative linear quantity.
    pub fn from_linear(x: f64) -> Result<Self> {
        if x.is_nan() || x < 0.0 {
            return Err(Error::param("x", format!("{x} is not a nonnegative number")));
        }
        Ok(LogValue(x.ln()))
    }

    pub fn ln(self) -> f64 {
        self.0
    }

    /// Back to the linear scale; overflows to `inf` for large values.
    pub fn exp(self) -> f64 {
        self.0.exp()
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    /// log(a·b)
    pub fn mul(self, other: LogValue) -> LogValue {
        if self.is_zero() || other.is_zero() {
            return LogValue::ZERO;
        }
        LogValue(self.0 + other.0)
    }

    /// log(a+b) with max-shift.
    pub fn add(self, other: LogValue) -> LogValue {
        LogValue(log_add(self.0, other.0))
    }
}

impl fmt::Debug for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LogValue({})", self.0)
    }
}

impl From<LogValue> for f64 {
    fn from(v: LogValue) -> f64 {
        v.0
    }
}

/// log(e^a + e^b)
#[inline]
pub fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// log Σ e^{x_i}, summed in ascending index order after shifting by the maximum.
pub fn log_sum_exp(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::EmptyReduction);
    }
    Ok(log_sum_exp_nonempty(xs))
}

#[inline]
pub(crate) fn log_sum_exp_nonempty(xs: &[f64]) -> f64 {
    if xs.len() == 1 {
        return xs[0];
    }
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || m == f64::INFINITY {
        return m;
    }
    let s: f64 = xs.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}

/// [`log_sum_exp`] over [`LogValue`]s.
pub fn log_sum_exp_values(xs: &[LogValue]) -> Result<LogValue> {
    // LogValue is repr(transparent) over f64
    let raw: Vec<f64> = xs.iter().map(|v| v.0).collect();
    log_sum_exp(&raw).map(LogValue)
}

/// Streaming log-sum-exp accumulator: keeps a running maximum and rescales the
/// partial sum when it moves, so each term costs one `exp`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct LogAccumulator {
    max: f64,
    sum: f64,
}

impl LogAccumulator {
    pub const EMPTY: LogAccumulator = LogAccumulator { max: f64::NEG_INFINITY, sum: 0.0 };

    #[inline]
    pub fn push(&mut self, x: f64) {
        if x <= self.max {
            if x != f64::NEG_INFINITY {
                self.sum += (x - self.max).exp();
            }
        } else {
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    #[inline]
    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

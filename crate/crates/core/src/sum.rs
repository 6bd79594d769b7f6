//! Compensated summation.

use std::iter::Sum;
use std::ops::AddAssign;

/// Running sum that tracks the low-order bits lost by each addition.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub const fn new() -> Self {
        Self {
            sum: 0.0,
            compensation: 0.0,
        }
    }

    /// Branch-free TwoSum update: the rounding error of each addition is
    /// recovered exactly and carried in `compensation`.
    #[inline(always)]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        let back = t - self.sum;
        let err = (self.sum - (t - back)) + (value - back);
        self.compensation += err;
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl AddAssign<f64> for CompensatedSum {
    #[inline]
    fn add_assign(&mut self, value: f64) {
        self.add(value);
    }
}

impl AddAssign<CompensatedSum> for CompensatedSum {
    fn add_assign(&mut self, other: CompensatedSum) {
        self.add(other.sum);
        self.add(other.compensation);
    }
}

impl Sum<f64> for CompensatedSum {
    fn sum<I: Iterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Compensated sum of a sequence, in iteration order.
pub fn sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().sum::<CompensatedSum>().value()
}

/// Compensated mean. Returns NaN for an empty slice.
pub fn mean(values: &[f64]) -> f64 {
    sum(values.iter().copied()) / values.len() as f64
}

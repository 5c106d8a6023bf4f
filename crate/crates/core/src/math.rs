//! Floating point helpers for `no_std` builds.

pub use libm::{ceil, exp, floor, lgamma, log, log1p, log2, pow, sqrt};

/// Neumaier compensated summation.
#[derive(Clone, Copy, Debug, Default)]
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

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl core::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// `ln C(n, j)`.
pub fn ln_choose(n: u64, j: u64) -> f64 {
    debug_assert!(j <= n);
    if j == 0 || j == n {
        return 0.0;
    }
    lgamma(n as f64 + 1.0) - lgamma(j as f64 + 1.0) - lgamma((n - j) as f64 + 1.0)
}

/// Smallest integer `m` with `m >= x` (for events of the form `B >= x`).
#[inline]
pub fn at_least(x: f64) -> u64 {
    if x <= 0.0 {
        0
    } else {
        ceil(x) as u64
    }
}

/// Largest integer `m` with `m <= x` (for events of the form `B <= x`).
#[inline]
pub fn at_most(x: f64) -> u64 {
    if x < 0.0 {
        0
    } else {
        floor(x) as u64
    }
}

/// Smallest integer strictly greater than `x`.
#[inline]
pub fn strictly_above(x: f64) -> u64 {
    if x < 0.0 {
        0
    } else {
        floor(x) as u64 + 1
    }
}

/// Natural log-sum-exp of a slice, `-inf` for an empty or all `-inf` slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let s: CompensatedSum = xs.iter().map(|&x| exp(x - max)).collect();
    max + log(s.value())
}

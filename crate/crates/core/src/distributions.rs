//! Offspring distributions over the non-negative integers.
//!
//! Every distribution is stored as an explicit, finite probability vector.
//! Infinite-support families (Poisson, power law) are truncated at a cutoff
//! and renormalised, so every tail sum below is an exact finite sum. Prefix and
//! suffix sums are accumulated with compensated summation at construction time,
//! which makes each tail query `O(1)`.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use thiserror::Error;

use crate::math::{ceil, exp, floor, lgamma, log, pow, CompensatedSum};

/// Normalisation tolerance accepted for user-supplied probability vectors.
const EXPLICIT_SUM_TOLERANCE: f64 = 1e-9;

/// Untruncated upper-tail mass below which a default cutoff is placed.
const DEFAULT_TRUNCATION_TAIL: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    #[error("probabilities sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },
}

fn invalid(name: &'static str, reason: &'static str) -> DistError {
    DistError::InvalidParameter { name, reason }
}

/// How a distribution was constructed.
#[derive(Clone, Debug, PartialEq)]
pub enum OffspringKind {
    Deterministic { d: usize },
    Binomial { n: usize, p: f64 },
    Poisson { lambda: f64, cutoff: usize },
    /// `ξ_i ∝ i^{-exponent}` for `min <= i <= cutoff`.
    PowerLawTail {
        min: usize,
        exponent: f64,
        cutoff: usize,
    },
    Explicit,
}

/// Which side of a tail query.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TailSide {
    /// `Σ_{j ≥ x} ξ_j`
    Upper,
    /// `Σ_{j < x} ξ_j`
    LowerStrict,
}

/// Outcome of [`OffspringDistribution::check_well_concentrated`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WellConcentration {
    pub holds: bool,
    /// Smallest `bound - tail` over every checked inequality.
    pub worst_slack: f64,
    /// Where the smallest slack occurs. For the lower-tail inequality this is
    /// `floor((1-γ)·d)`.
    pub worst_x: usize,
}

/// A probability mass function on `{0, …, support_max}`.
#[derive(Clone, Debug)]
pub struct OffspringDistribution {
    kind: OffspringKind,
    pmf: Vec<f64>,
    /// `lower[x] = Σ_{j<x} ξ_j` for `x` in `0..=len`.
    lower: Vec<f64>,
    /// `upper[x] = Σ_{j≥x} ξ_j` for `x` in `0..=len`.
    upper: Vec<f64>,
    /// `size_biased[x] = Σ_{j≥x} j·ξ_j` for `x` in `0..=len`.
    size_biased: Vec<f64>,
    /// Cumulative distribution used for inverse-CDF sampling.
    cdf: Vec<f64>,
    mean: f64,
}

impl OffspringDistribution {
    /// Point mass at `d`.
    pub fn deterministic(d: usize) -> Self {
        let mut pmf = vec![0.0; d + 1];
        pmf[d] = 1.0;
        Self::build(OffspringKind::Deterministic { d }, pmf)
    }

    /// `Binomial(n, p)`.
    pub fn binomial(n: usize, p: f64) -> Result<Self, DistError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid("p", "must lie in [0, 1]"));
        }
        let pmf = binomial_pmf(n, p);
        Ok(Self::build(OffspringKind::Binomial { n, p }, pmf))
    }

    /// `Poisson(λ)` truncated at the smallest cutoff whose untruncated upper
    /// tail is below `1e-14`.
    pub fn poisson(lambda: f64) -> Result<Self, DistError> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(invalid("lambda", "must be positive and finite"));
        }
        let pmf = normalise(poisson_pmf_default(lambda))?;
        let cutoff = pmf.len() - 1;
        Ok(Self::build(OffspringKind::Poisson { lambda, cutoff }, pmf))
    }

    /// `Poisson(λ)` restricted to `{0, …, cutoff}` and renormalised.
    pub fn poisson_truncated(lambda: f64, cutoff: usize) -> Result<Self, DistError> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(invalid("lambda", "must be positive and finite"));
        }
        let logs: Vec<f64> = (0..=cutoff).map(|i| poisson_log_pmf(lambda, i)).collect();
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights = logs.iter().map(|&l| exp(l - top)).collect();
        let pmf = normalise(weights)?;
        Ok(Self::build(OffspringKind::Poisson { lambda, cutoff }, pmf))
    }

    /// `ξ_i ∝ i^{-exponent}` on `[min, cutoff]`.
    pub fn power_law_tail(min: usize, exponent: f64, cutoff: usize) -> Result<Self, DistError> {
        if min == 0 {
            return Err(invalid("d", "power-law support must start at 1 or above"));
        }
        if cutoff < min {
            return Err(invalid("cutoff", "must be at least the minimum degree"));
        }
        if !(exponent > 0.0) || !exponent.is_finite() {
            return Err(invalid("exponent", "must be positive and finite"));
        }
        let mut weights = vec![0.0; cutoff + 1];
        for (i, w) in weights.iter_mut().enumerate().skip(min) {
            *w = pow(i as f64, -exponent);
        }
        let pmf = normalise(weights)?;
        Ok(Self::build(
            OffspringKind::PowerLawTail {
                min,
                exponent,
                cutoff,
            },
            pmf,
        ))
    }

    /// An explicit probability vector; entry `i` is `ξ_i`. The entries must sum
    /// to one within `1e-9`; they are renormalised exactly afterwards.
    pub fn explicit(probs: &[f64]) -> Result<Self, DistError> {
        validate_weights(probs)?;
        let sum: CompensatedSum = probs.iter().copied().collect();
        let sum = sum.value();
        if (sum - 1.0).abs() > EXPLICIT_SUM_TOLERANCE {
            return Err(DistError::NotNormalized { sum });
        }
        Ok(Self::build(OffspringKind::Explicit, normalise(probs.to_vec())?))
    }

    /// An explicit distribution from unnormalised non-negative weights.
    pub fn from_weights(weights: &[f64]) -> Result<Self, DistError> {
        validate_weights(weights)?;
        Ok(Self::build(
            OffspringKind::Explicit,
            normalise(weights.to_vec())?,
        ))
    }

    fn build(kind: OffspringKind, mut pmf: Vec<f64>) -> Self {
        while pmf.len() > 1 && pmf[pmf.len() - 1] == 0.0 {
            pmf.pop();
        }
        let len = pmf.len();

        let mut lower = Vec::with_capacity(len + 1);
        let mut acc = CompensatedSum::new();
        lower.push(0.0);
        for &p in &pmf {
            acc.add(p);
            lower.push(acc.value());
        }

        let mut upper = vec![0.0; len + 1];
        let mut size_biased = vec![0.0; len + 1];
        let mut acc = CompensatedSum::new();
        let mut acc_sb = CompensatedSum::new();
        for i in (0..len).rev() {
            acc.add(pmf[i]);
            acc_sb.add(i as f64 * pmf[i]);
            upper[i] = acc.value();
            size_biased[i] = acc_sb.value();
        }
        let mean = size_biased[0];
        let cdf = lower[1..].to_vec();

        Self {
            kind,
            pmf,
            lower,
            upper,
            size_biased,
            cdf,
            mean,
        }
    }

    pub fn kind(&self) -> &OffspringKind {
        &self.kind
    }

    /// `ξ_i`; zero outside the support.
    pub fn pmf(&self, i: usize) -> f64 {
        self.pmf.get(i).copied().unwrap_or(0.0)
    }

    /// The probability vector `ξ_0, …, ξ_{support_max}`.
    pub fn probs(&self) -> &[f64] {
        &self.pmf
    }

    /// Largest `i` with `ξ_i > 0`.
    pub fn support_max(&self) -> usize {
        self.pmf.len() - 1
    }

    /// `d_ξ = Σ i·ξ_i`.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn tail(&self, x: usize, side: TailSide) -> f64 {
        match side {
            TailSide::Upper => self.upper_tail(x),
            TailSide::LowerStrict => self.lower_tail_strict(x),
        }
    }

    /// `Σ_{j ≥ x} ξ_j`.
    pub fn upper_tail(&self, x: usize) -> f64 {
        self.upper.get(x).copied().unwrap_or(0.0)
    }

    /// `Σ_{j < x} ξ_j`.
    pub fn lower_tail_strict(&self, x: usize) -> f64 {
        let x = x.min(self.pmf.len());
        self.lower[x]
    }

    /// `Σ_{t > x} t·ξ_t`.
    pub fn size_biased_upper_tail(&self, x: usize) -> f64 {
        self.size_biased.get(x + 1).copied().unwrap_or(0.0)
    }

    /// Draws one offspring count by inverse-CDF lookup.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let u = u * self.lower[self.pmf.len()];
        let i = self.cdf.partition_point(|&c| c <= u);
        i.min(self.pmf.len() - 1)
    }

    /// Verifies the two polynomial tail conditions of well-concentration on a
    /// finite range: `Σ_{j≥x} ξ_j ≤ x^{-c}` for every integer
    /// `x ∈ [(1+γ)d, x_max]`, and `Σ_{j≤(1-γ)d} ξ_j ≤ d^{-c}`.
    ///
    /// This certifies nothing about the asymptotic property; it reports the
    /// slack on the checked range.
    pub fn check_well_concentrated(
        &self,
        c: f64,
        gamma: f64,
        x_max: usize,
    ) -> Result<WellConcentration, DistError> {
        if !(c > 0.0) {
            return Err(invalid("c", "must be positive"));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(invalid("gamma", "must lie in (0, 1)"));
        }
        let d = self.mean;
        let x_min = ceil((1.0 + gamma) * d) as usize;
        if x_max < x_min {
            return Err(invalid("x_max", "must be at least ceil((1+gamma)·mean)"));
        }

        let lower_x = floor((1.0 - gamma) * d);
        let lower_mass = if lower_x < 0.0 {
            0.0
        } else {
            self.lower_tail_strict(lower_x as usize + 1)
        };
        let mut worst_slack = pow(d, -c) - lower_mass;
        let mut worst_x = lower_x.max(0.0) as usize;

        for x in x_min.max(1)..=x_max {
            let slack = pow(x as f64, -c) - self.upper_tail(x);
            if slack < worst_slack {
                worst_slack = slack;
                worst_x = x;
            }
        }
        Ok(WellConcentration {
            holds: worst_slack >= 0.0,
            worst_slack,
            worst_x,
        })
    }
}

fn validate_weights(weights: &[f64]) -> Result<(), DistError> {
    if weights.is_empty() {
        return Err(invalid("probs", "must not be empty"));
    }
    if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
        return Err(invalid("probs", "entries must be finite and non-negative"));
    }
    Ok(())
}

fn normalise(mut weights: Vec<f64>) -> Result<Vec<f64>, DistError> {
    let total: CompensatedSum = weights.iter().copied().collect();
    let total = total.value();
    if !(total > 0.0) {
        return Err(invalid("probs", "total mass must be positive"));
    }
    for w in &mut weights {
        *w /= total;
    }
    Ok(weights)
}

/// Binomial pmf by the ratio recurrence outward from the mode, then
/// normalised. Each entry carries O(distance-to-mode) rounding steps only.
fn binomial_pmf(n: usize, p: f64) -> Vec<f64> {
    let mut pmf = vec![0.0; n + 1];
    if p == 0.0 {
        pmf[0] = 1.0;
        return pmf;
    }
    if p == 1.0 {
        pmf[n] = 1.0;
        return pmf;
    }
    let q = 1.0 - p;
    let mode = (floor((n as f64 + 1.0) * p) as usize).min(n);
    pmf[mode] = 1.0;
    let odds = p / q;
    for i in mode + 1..=n {
        pmf[i] = pmf[i - 1] * odds * (n - i + 1) as f64 / i as f64;
        if pmf[i] == 0.0 {
            break;
        }
    }
    for i in (0..mode).rev() {
        pmf[i] = pmf[i + 1] / odds * (i + 1) as f64 / (n - i) as f64;
        if pmf[i] == 0.0 {
            break;
        }
    }
    let total: CompensatedSum = pmf.iter().copied().collect();
    let total = total.value();
    for x in &mut pmf {
        *x /= total;
    }
    pmf
}

/// `log ξ_i` for `Poisson(λ)`.
fn poisson_log_pmf(lambda: f64, i: usize) -> f64 {
    -lambda + i as f64 * log(lambda) - lgamma(i as f64 + 1.0)
}

/// Poisson pmf on `0..=n` where `n` is the first index past the mean whose
/// untruncated upper tail falls below `1e-14`.
fn poisson_pmf_default(lambda: f64) -> Vec<f64> {
    let mut pmf = Vec::new();
    let mut cumulative = CompensatedSum::new();
    let mut i = 0usize;
    loop {
        let p = exp(poisson_log_pmf(lambda, i));
        pmf.push(p);
        cumulative.add(p);
        let tail = 1.0 - cumulative.value();
        if (i as f64) > lambda && tail < DEFAULT_TRUNCATION_TAIL {
            break;
        }
        i += 1;
    }
    pmf
}

//! Threshold quantities `Δ₊`, `Δ₋` and the closed-form bounds built on them.
//!
//! Every binomial probability here is an exact finite sum evaluated in log
//! space. Real-valued cut-offs such as `Δ^δ` are converted to integers in the
//! direction that keeps each inequality exact:
//!
//! | event        | integer form          |
//! |--------------|-----------------------|
//! | `B ≥ x`      | `B ≥ ceil(x)`         |
//! | `B > x`      | `B ≥ floor(x) + 1`    |
//! | `B < x`      | `B < ceil(x)`         |
//! | `N ≤ x`      | `N ≤ floor(x)`        |

use alloc::vec::Vec;

use thiserror::Error;

use crate::distributions::OffspringDistribution;
use crate::math::{at_least, ceil, exp, floor, ln_choose, log, log2, pow, strictly_above, CompensatedSum};

/// Upper end (exclusive) of the admissible range for `q` and `g`.
pub const WITNESS_LIMIT: f64 = 0.75;

/// Convergence tolerance of the `g` fixed-point iteration.
pub const FIXED_POINT_TOLERANCE: f64 = 1e-10;

/// Iteration cap for both fixed-point searches.
pub const MAX_FIXED_POINT_STEPS: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThresholdError {
    #[error("no admissible {what} exists for this distribution and parameters")]
    NotFound { what: &'static str },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    #[error("parameter violation: {0}")]
    ParameterViolation(&'static str),
}

fn invalid(name: &'static str, reason: &'static str) -> ThresholdError {
    ThresholdError::InvalidParameter { name, reason }
}

fn check_delta(delta: f64) -> Result<(), ThresholdError> {
    if delta > 0.0 && delta <= 0.1 {
        Ok(())
    } else {
        Err(invalid("delta", "must lie in (0, 1/10]"))
    }
}

/// Base of the logarithm in `1 - 1/log k` style expressions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LogBase {
    #[default]
    Two,
    Natural,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Two => log2(x),
            LogBase::Natural => log(x),
        }
    }
}

/// How `δ` is derived from `α`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DeltaRule {
    /// `δ = min(α/2, 1/10)`.
    #[default]
    HalfAlpha,
    /// `δ = min(α/4, 1/10)`.
    QuarterAlpha,
}

impl DeltaRule {
    pub fn delta(self, alpha: f64) -> f64 {
        let raw = match self {
            DeltaRule::HalfAlpha => alpha / 2.0,
            DeltaRule::QuarterAlpha => alpha / 4.0,
        };
        raw.min(0.1)
    }
}

/// `Pr[B(n, p) ≥ m]`.
///
/// Sums whichever side of the distribution is smaller, starting from the
/// term adjacent to `m` and moving away from the mode so terms decrease.
pub fn binomial_tail_geq(n: u64, p: f64, m: u64) -> f64 {
    if m == 0 {
        return 1.0;
    }
    if m > n {
        return 0.0;
    }
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let mean = n as f64 * p;
    if m as f64 > mean {
        sum_upward(n, p, m)
    } else {
        1.0 - sum_downward(n, p, m - 1)
    }
}

/// `Pr[B(n, p) < m]`.
pub fn binomial_tail_lt(n: u64, p: f64, m: u64) -> f64 {
    if m == 0 {
        return 0.0;
    }
    if m > n {
        return 1.0;
    }
    binomial_tail_geq(n, 1.0 - p, n - m + 1)
}

fn log_term(n: u64, p: f64, j: u64) -> f64 {
    ln_choose(n, j) + j as f64 * log(p) + (n - j) as f64 * log(1.0 - p)
}

/// `Σ_{j=m..n} Pr[B = j]` for `m` above the mode.
fn sum_upward(n: u64, p: f64, m: u64) -> f64 {
    let odds = p / (1.0 - p);
    let mut term = exp(log_term(n, p, m));
    let mut acc = CompensatedSum::new();
    let mut j = m;
    loop {
        acc.add(term);
        if j == n || term <= acc.value() * 1e-18 {
            break;
        }
        term *= odds * (n - j) as f64 / (j + 1) as f64;
        j += 1;
    }
    acc.value().min(1.0)
}

/// `Σ_{j=0..top} Pr[B = j]` for `top` below the mode.
fn sum_downward(n: u64, p: f64, top: u64) -> f64 {
    let odds = p / (1.0 - p);
    let mut term = exp(log_term(n, p, top));
    let mut acc = CompensatedSum::new();
    let mut j = top;
    loop {
        acc.add(term);
        if j == 0 || term <= acc.value() * 1e-18 {
            break;
        }
        term *= j as f64 / ((n - j + 1) as f64 * odds);
        j -= 1;
    }
    acc.value().min(1.0)
}

/// A computed `Δ₊` together with its witness and slacks.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdPlusReport {
    pub delta_plus: usize,
    pub q: f64,
    pub beta: f64,
    pub delta: f64,
    /// `q - Σ_{i>Δ₊} ξ_i - Pr[B(Δ₊, q) ≥ Δ₊^δ]`.
    pub slack_eq2: f64,
    /// `d^{-2β} - Σ_{t>Δ₊} t·ξ_t`.
    pub slack_eq3_left: f64,
    /// `d^{-2β} - Pr[B(Δ₊, q) > Δ₊^δ]`.
    pub slack_eq3_right: f64,
}

/// A computed `Δ₋` together with its witness and slack.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdMinusReport {
    pub delta_minus: usize,
    pub g: f64,
    pub delta: f64,
    /// `g - RHS(g)`.
    pub slack_eq4: f64,
}

/// The three quantities of the `Δ₊` definition at a fixed candidate.
#[derive(Clone, Copy, Debug)]
pub struct PlusTerms {
    /// `Σ_{i>Δ} ξ_i`.
    pub tail: f64,
    /// `Σ_{t>Δ} t·ξ_t`.
    pub size_biased_tail: f64,
    /// `ceil(Δ^δ)`.
    pub m_geq: u64,
    /// `floor(Δ^δ) + 1`.
    pub m_gt: u64,
}

impl PlusTerms {
    pub fn new(dist: &OffspringDistribution, candidate: usize, delta: f64) -> Self {
        let power = pow(candidate as f64, delta);
        Self {
            tail: dist.upper_tail(candidate + 1),
            size_biased_tail: dist.size_biased_upper_tail(candidate),
            m_geq: at_least(power),
            m_gt: strictly_above(power),
        }
    }

    /// Right-hand side of the `q` inequality.
    pub fn rhs(&self, candidate: usize, q: f64) -> f64 {
        self.tail + binomial_tail_geq(candidate as u64, q, self.m_geq)
    }
}

/// Finds the smallest `q` in `[from, 3/4)` with `q ≥ rhs(q)` for a
/// non-decreasing `rhs`, by iterating from `from`. The returned value is
/// checked to satisfy the inequality exactly.
fn least_fixed_point(from: f64, rhs: impl Fn(f64) -> f64) -> Option<f64> {
    let mut x = from;
    let mut converged = false;
    for _ in 0..MAX_FIXED_POINT_STEPS {
        let next = rhs(x);
        if next >= WITNESS_LIMIT {
            return None;
        }
        if (next - x).abs() < FIXED_POINT_TOLERANCE {
            x = next.max(x);
            converged = true;
            break;
        }
        x = next;
    }
    if !converged {
        return None;
    }
    // The iterates approach the fixed point from below; nudge upward until
    // the inequality holds in floating point.
    let mut bump = FIXED_POINT_TOLERANCE;
    for _ in 0..64 {
        if x >= rhs(x) {
            return Some(x);
        }
        x += bump;
        bump *= 2.0;
        if x >= WITNESS_LIMIT {
            return None;
        }
    }
    None
}

/// Evaluates the `Δ₊` definition at one candidate integer. Returns the
/// smallest passing `q` among the least fixed point, the uniform grid and
/// `extra_q`, with its slacks.
fn try_delta_plus(
    dist: &OffspringDistribution,
    candidate: usize,
    delta: f64,
    bound: f64,
    q_grid: usize,
    extra_q: &[f64],
) -> Option<(f64, f64, f64, f64)> {
    let terms = PlusTerms::new(dist, candidate, delta);
    let slack_left = bound - terms.size_biased_tail;
    if slack_left < 0.0 {
        return None;
    }
    let n = candidate as u64;
    let evaluate = |q: f64| -> Option<(f64, f64, f64, f64)> {
        if !(0.0..WITNESS_LIMIT).contains(&q) {
            return None;
        }
        let slack_eq2 = q - terms.rhs(candidate, q);
        let slack_right = bound - binomial_tail_geq(n, q, terms.m_gt);
        (slack_eq2 >= 0.0 && slack_right >= 0.0).then_some((q, slack_eq2, slack_left, slack_right))
    };

    let mut best: Option<(f64, f64, f64, f64)> = None;
    let consider = |best: &mut Option<(f64, f64, f64, f64)>, found: Option<(f64, f64, f64, f64)>| {
        if let Some(f) = found {
            if best.is_none_or(|b| f.0 < b.0) {
                *best = Some(f);
            }
        }
    };

    if let Some(q) = least_fixed_point(0.0, |q| terms.rhs(candidate, q)) {
        consider(&mut best, evaluate(q));
    }
    for i in 0..q_grid {
        let q = WITNESS_LIMIT * i as f64 / q_grid as f64;
        if best.is_some_and(|b| b.0 <= q) {
            break;
        }
        consider(&mut best, evaluate(q));
    }
    for &q in extra_q {
        consider(&mut best, evaluate(q));
    }
    best
}

/// Minimum integer `Δ₊ ≥ ceil(d_ξ)` admitting a witness `q ∈ [0, 3/4)` for the
/// `Δ₊` definition with bound `d_ξ^{-2β}`.
///
/// Candidate values of `q` are the least fixed point of
/// `q ↦ Σ_{i>Δ}ξ_i + Pr[B(Δ,q) ≥ Δ^δ]` and a uniform grid of `q_grid` points
/// on `[0, 3/4)`.
pub fn compute_delta_plus(
    dist: &OffspringDistribution,
    delta: f64,
    beta: f64,
    q_grid: usize,
) -> Result<ThresholdPlusReport, ThresholdError> {
    compute_delta_plus_with(dist, delta, beta, q_grid, &[])
}

/// [`compute_delta_plus`] with additional candidate values of `q`.
pub fn compute_delta_plus_with(
    dist: &OffspringDistribution,
    delta: f64,
    beta: f64,
    q_grid: usize,
    extra_q: &[f64],
) -> Result<ThresholdPlusReport, ThresholdError> {
    check_delta(delta)?;
    if !(beta >= 4.0) {
        return Err(invalid("beta", "must be at least 4"));
    }
    if q_grid < 100 {
        return Err(invalid("q_grid", "must be at least 100"));
    }
    let d = dist.mean();
    let bound = exp(-2.0 * beta * log(d));
    let start = ceil(d) as usize;
    for candidate in start..=dist.support_max().max(start) {
        if let Some((q, slack_eq2, slack_eq3_left, slack_eq3_right)) =
            try_delta_plus(dist, candidate, delta, bound, q_grid, extra_q)
        {
            return Ok(ThresholdPlusReport {
                delta_plus: candidate,
                q,
                beta,
                delta,
                slack_eq2,
                slack_eq3_left,
                slack_eq3_right,
            });
        }
    }
    Err(ThresholdError::NotFound { what: "delta_plus" })
}

/// Right-hand side of the `g` inequality at candidate `Δ₋`:
/// `Σ_{i<Δ}ξ_i + Σ_{i≥Δ} ξ_i·Pr[B(i, 1-g) < Δ - Δ^δ]`.
pub fn delta_minus_rhs(dist: &OffspringDistribution, candidate: usize, delta: f64, g: f64) -> f64 {
    let m_lt = at_least(candidate as f64 - pow(candidate as f64, delta));
    let mut acc = CompensatedSum::new();
    acc.add(dist.lower_tail_strict(candidate));
    for (i, &xi) in dist.probs().iter().enumerate().skip(candidate) {
        if xi > 0.0 {
            acc.add(xi * binomial_tail_lt(i as u64, 1.0 - g, m_lt));
        }
    }
    acc.value()
}

/// Maximum integer `Δ₋ ≤ floor(d_ξ)` admitting `g ∈ [0, 3/4)` with
/// `g ≥ RHS(g)`. `g` is the least fixed point, reached by monotone iteration
/// from `Σ_{i<Δ₋}ξ_i`.
pub fn compute_delta_minus(
    dist: &OffspringDistribution,
    delta: f64,
) -> Result<ThresholdMinusReport, ThresholdError> {
    check_delta(delta)?;
    let top = floor(dist.mean()) as usize;
    for candidate in (1..=top).rev() {
        let g0 = dist.lower_tail_strict(candidate);
        if g0 >= WITNESS_LIMIT {
            continue;
        }
        let rhs = |g: f64| delta_minus_rhs(dist, candidate, delta, g);
        if let Some(g) = least_fixed_point(g0, rhs) {
            return Ok(ThresholdMinusReport {
                delta_minus: candidate,
                g,
                delta,
                slack_eq4: g - rhs(g),
            });
        }
    }
    Err(ThresholdError::NotFound { what: "delta_minus" })
}

/// `8k²(2Δ₊)^{-0.45·δ·h}`.
pub fn nonrecon_bound(k: u32, delta_plus: usize, delta: f64, h: u32) -> f64 {
    let k = k as f64;
    8.0 * k * k * pow(2.0 * delta_plus as f64, -0.45 * delta * h as f64)
}

/// `(1/4)(1 - 2/log k)`.
pub fn recon_bound(k: u32, base: LogBase) -> f64 {
    0.25 * (1.0 - 2.0 / base.log(k as f64))
}

/// `exp[-(1 - θ(1-ζ))·β·ln(d)·h]`, the bound on `Pr[T ∉ 𝒜_{h,ζ}]`.
pub fn a_set_bound(d_xi: f64, beta: f64, zeta: f64, theta: f64, h: u32) -> Result<f64, ThresholdError> {
    if !((1.0 - zeta) * theta < 1.0) {
        return Err(ThresholdError::ParameterViolation("requires (1-zeta)*theta < 1"));
    }
    if !(beta * (1.0 - theta) < -1.0) {
        return Err(ThresholdError::ParameterViolation("requires beta*(1-theta) < -1"));
    }
    Ok(exp(-(1.0 - theta * (1.0 - zeta)) * beta * log(d_xi) * h as f64))
}

/// Evaluates the recursion bounding `Q_{h,i}`, the probability that some
/// root-to-depth-`h` path carries at least `i` non-mixing vertices:
///
/// `Q_{h,i} ≤ 2d·Q_{h-1,i-1} + Q_{h-1,i}·(2d·Pr[B(Δ₊,q) ≥ Δ₊^δ] + Σ_{t>Δ₊} t·ξ_t)`
///
/// with `Q_{h,0} = 1` and `Q_{1,i} = Σ_{t≥Δ₊} ξ_t` for `i ≥ 1`. Every value is
/// capped at 1.
pub fn q_recursion_bound(
    dist: &OffspringDistribution,
    delta_plus: usize,
    q: f64,
    delta: f64,
    h: u32,
    i: u32,
) -> f64 {
    if i == 0 {
        return 1.0;
    }
    let h = h as usize;
    let i = i as usize;
    if h == 0 {
        return 1.0;
    }
    let two_d = 2.0 * dist.mean();
    let m_geq = at_least(pow(delta_plus as f64, delta));
    let factor = two_d * binomial_tail_geq(delta_plus as u64, q, m_geq)
        + dist.size_biased_upper_tail(delta_plus);
    let base = dist.upper_tail(delta_plus);

    // row[j] = Q_{level, j} for j in 0..=i
    let mut row: Vec<f64> = (0..=i).map(|j| if j == 0 { 1.0 } else { base }).collect();
    for _ in 2..=h {
        let mut next = row.clone();
        for j in 1..=i {
            next[j] = (two_d * row[j - 1] + row[j] * factor).min(1.0);
        }
        row = next;
    }
    row[i].min(1.0)
}

/// `k₊ = (1+α)Δ₊/ln Δ₊`, the colour count above which non-reconstruction is
/// proved.
pub fn k_upper(alpha: f64, delta_plus: usize) -> f64 {
    let x = delta_plus as f64;
    (1.0 + alpha) * x / log(x)
}

/// `k₋ = (1-α)Δ₋/ln Δ₋`, the colour count below which reconstruction is
/// proved.
pub fn k_lower(alpha: f64, delta_minus: usize) -> f64 {
    let x = delta_minus as f64;
    (1.0 - alpha) * x / log(x)
}

fn x_over_ln(x: f64) -> f64 {
    x / log(x)
}

/// `(γ₁, γ₂)` for mean `d`: `γ₁` is the largest value with
/// `(1+α)d/ln d ≥ (1+α/2)ρ/ln ρ` at `ρ = (1+γ₁)d`, and `γ₂` the largest with
/// `(1-α)d/ln d ≤ (1-α/2)ρ/ln ρ` at `ρ = (1-γ₂)d`. Requires `d > e` so that
/// `x/ln x` is increasing on the relevant range.
pub fn concentration_gammas(alpha: f64, d: f64) -> Result<(f64, f64), ThresholdError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid("alpha", "must lie in (0, 1)"));
    }
    if !(d > core::f64::consts::E) {
        return Err(invalid("d", "must exceed e"));
    }
    let target_plus = (1.0 + alpha) * x_over_ln(d);
    let plus_ok = |g: f64| (1.0 + alpha / 2.0) * x_over_ln((1.0 + g) * d) <= target_plus;
    let mut hi = 1.0;
    while plus_ok(hi) {
        hi *= 2.0;
    }
    let gamma1 = bisect(0.0, hi, plus_ok);

    let target_minus = (1.0 - alpha) * x_over_ln(d);
    let lowest = core::f64::consts::E / d;
    let minus_ok =
        |g: f64| (1.0 - alpha / 2.0) * x_over_ln((1.0 - g) * d) >= target_minus;
    let gamma2 = bisect(0.0, 1.0 - lowest, minus_ok);
    Ok((gamma1, gamma2))
}

/// Largest `x` in `[lo, hi]` with `ok(x)`, assuming `ok` holds on a prefix.
fn bisect(mut lo: f64, mut hi: f64, ok: impl Fn(f64) -> bool) -> f64 {
    if ok(hi) {
        return hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// `(2Δ₊^{-γ})^{(3/4-ζ)h}`, the bound on the root disagreement caused by one
/// leaf change under non-biasing boundaries on trees in `𝒜_{h,ζ}`.
pub fn disagreement_bound(delta_plus: usize, gamma: f64, zeta: f64, h: u32) -> f64 {
    pow(
        2.0 * pow(delta_plus as f64, -gamma),
        (0.75 - zeta) * h as f64,
    )
}

/// `exp(-(1/8)Δ₊^{((t-1)/2)δ + (7/8)α/(1+α)})`, the bound on the probability
/// that a random colouring of a mixing-rooted height-`t` tree biases its root.
pub fn bias_prob_bound(delta_plus: usize, delta: f64, alpha: f64, t: u32) -> f64 {
    let exponent = (t as f64 - 1.0) / 2.0 * delta + 0.875 * alpha / (1.0 + alpha);
    exp(-0.125 * pow(delta_plus as f64, exponent))
}

/// `2·exp(-(1/8)Δ₊^{((h/4-1)/2)δ + (7/8)α/(1+α)})`, the bound on
/// `Pr[X_L ∉ 𝒰_w]`.
pub fn prob_not_in_u_bound(delta_plus: usize, delta: f64, alpha: f64, h: u32) -> f64 {
    let exponent = (h as f64 / 4.0 - 1.0) / 2.0 * delta + 0.875 * alpha / (1.0 + alpha);
    2.0 * exp(-0.125 * pow(delta_plus as f64, exponent))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{One, ToPrimitive, Zero};

    fn rational_tail_geq(n: u64, p: f64, m: u64) -> f64 {
        let p = BigRational::from_float(p).unwrap();
        let q = BigRational::one() - &p;
        let mut total = BigRational::zero();
        let mut choose = BigInt::one();
        for j in 0..=n {
            if j > 0 {
                choose = choose * BigInt::from(n - j + 1) / BigInt::from(j);
            }
            if j >= m {
                let mut term = BigRational::from_integer(choose.clone());
                for _ in 0..j {
                    term *= &p;
                }
                for _ in 0..n - j {
                    term *= &q;
                }
                total += term;
            }
        }
        total.to_f64().unwrap()
    }

    #[test]
    fn binomial_tail_examples() {
        assert!((binomial_tail_geq(4, 0.5, 2) - 0.6875).abs() < 1e-15);
        assert_eq!(binomial_tail_geq(100, 0.0, 1), 0.0);
        assert_eq!(binomial_tail_geq(10, 0.3, 0), 1.0);
        assert_eq!(binomial_tail_geq(10, 0.3, 11), 0.0);
        let exact = rational_tail_geq(30, 0.2, 10);
        assert!((binomial_tail_geq(30, 0.2, 10) - exact).abs() < 1e-12);
    }

    #[test]
    fn binomial_tail_matches_rational_oracle() {
        for &n in &[1u64, 2, 7, 19, 33, 50] {
            for &p in &[0.01, 0.2, 0.5, 0.77, 0.99] {
                for m in 0..=n + 1 {
                    let exact = rational_tail_geq(n, p, m);
                    let fast = binomial_tail_geq(n, p, m);
                    assert!((fast - exact).abs() < 1e-12, "n={n} p={p} m={m}");
                    let lt = binomial_tail_lt(n, p, m);
                    assert!((fast + lt - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn deterministic_thresholds_equal_d() {
        for d in [10usize, 30, 100] {
            let dist = OffspringDistribution::deterministic(d);
            let plus = compute_delta_plus(&dist, 0.1, 4.0, 100).unwrap();
            assert_eq!(plus.delta_plus, d);
            assert_eq!(plus.q, 0.0);
            let minus = compute_delta_minus(&dist, 0.1).unwrap();
            assert_eq!(minus.delta_minus, d);
            assert_eq!(minus.g, 0.0);
        }
    }

    #[test]
    fn degenerate_zero_offspring_is_not_found() {
        let dist = OffspringDistribution::explicit(&[1.0]).unwrap();
        assert!(matches!(
            compute_delta_minus(&dist, 0.1),
            Err(ThresholdError::NotFound { .. })
        ));
    }

    #[test]
    fn parameter_validation() {
        let dist = OffspringDistribution::deterministic(10);
        assert!(compute_delta_plus(&dist, 0.0, 4.0, 100).is_err());
        assert!(compute_delta_plus(&dist, 0.1, 3.0, 100).is_err());
        assert!(compute_delta_plus(&dist, 0.1, 4.0, 10).is_err());
        assert!(compute_delta_minus(&dist, 0.2).is_err());
    }

    #[test]
    fn closed_form_bounds() {
        assert_eq!(nonrecon_bound(10, 30, 0.1, 0), 800.0);
        let b1 = nonrecon_bound(10, 30, 0.1, 7);
        let b2 = nonrecon_bound(10, 30, 0.1, 14);
        assert!((b2 - b1 * b1 / 800.0).abs() < 1e-12 * b2.abs().max(1.0));
        let expected = 8.0 * 144.0 * libm::pow(120.0, -0.9);
        assert!((nonrecon_bound(12, 60, 0.1, 20) - expected).abs() < 1e-12);

        assert_eq!(recon_bound(4, LogBase::Two), 0.0);
        assert!((recon_bound(16, LogBase::Two) - 0.125).abs() < 1e-15);
        assert!((recon_bound(1024, LogBase::Two) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn a_set_bound_examples() {
        let e = core::f64::consts::E;
        let v = a_set_bound(e, 4.0, 0.25, 1.3, 1).unwrap();
        assert!((v - libm::exp(-0.1)).abs() < 1e-12);
        assert_eq!(a_set_bound(50.0, 4.0, 0.25, 1.3, 0).unwrap(), 1.0);
        let d: f64 = 30.0;
        let v = a_set_bound(d, 4.0, 0.25, 1.3, 8).unwrap();
        assert!((v - libm::pow(d, -0.8)).abs() < 1e-12);
        assert!(a_set_bound(d, 4.0, 0.25, 1.0, 8).is_err());
        assert!(a_set_bound(d, 4.0, 0.0, 1.3, 8).is_err());
    }

    #[test]
    fn q_recursion_base_cases() {
        let dist = OffspringDistribution::deterministic(30);
        assert_eq!(q_recursion_bound(&dist, 30, 0.0, 0.1, 5, 0), 1.0);
        assert_eq!(q_recursion_bound(&dist, 30, 0.0, 0.1, 1, 1), 1.0);
        assert_eq!(q_recursion_bound(&dist, 31, 0.0, 0.1, 1, 1), 0.0);
    }

    #[test]
    fn delta_rule() {
        assert_eq!(DeltaRule::HalfAlpha.delta(0.1), 0.05);
        assert_eq!(DeltaRule::QuarterAlpha.delta(0.2), 0.05);
        assert_eq!(DeltaRule::HalfAlpha.delta(0.8), 0.1);
    }

    #[test]
    fn gammas_satisfy_their_defining_inequalities() {
        let (g1, g2) = concentration_gammas(0.2, 100.0).unwrap();
        assert!(g1 > 0.0 && g2 > 0.0);
        let lhs = 1.2 * 100.0 / libm::log(100.0);
        let rho = (1.0 + g1) * 100.0;
        assert!(lhs >= 1.1 * rho / libm::log(rho) - 1e-9);
        let rho = (1.0 - g2) * 100.0;
        assert!(0.8 * 100.0 / libm::log(100.0) <= 0.9 * rho / libm::log(rho) + 1e-9);
    }
}

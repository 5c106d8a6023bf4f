//! Exact laws of root-level statistics of truncated Galton-Watson subtrees.
//!
//! Subtrees hanging from distinct vertices are independent copies of the same
//! random tree, so the law of a statistic at the root of a height-`t` tree is a
//! function of the law at height `t - 1`. Each recursion below runs over the
//! offspring distribution once per level.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::distributions::OffspringDistribution;
use crate::math::{exp, ln_choose, log, CompensatedSum};
use crate::thresholds::binomial_tail_geq;

use super::{freezable_quota, mixing_allowance};

/// `Σ_N ξ_N·x^N`, the probability generating function.
pub fn pgf(dist: &OffspringDistribution, x: f64) -> f64 {
    let mut acc = CompensatedSum::new();
    let mut power = 1.0;
    for &p in dist.probs() {
        acc.add(p * power);
        power *= x;
    }
    acc.value()
}

/// `s_t`, the probability that a height-`t` tree has a depth-`t` node, for
/// `t = 0..=h`.
pub fn survival(dist: &OffspringDistribution, h: u32) -> Vec<f64> {
    let mut s = vec![1.0];
    for _ in 0..h {
        let prev = *s.last().unwrap();
        s.push(1.0 - pgf(dist, 1.0 - prev));
    }
    s
}

/// `p_t`, the probability that the root of a height-`t` tree is freezable,
/// for `t = 0..=h`. `p_0` is zero.
pub fn freezable(dist: &OffspringDistribution, h: u32, delta_minus: usize, delta: f64) -> Vec<f64> {
    let quota = freezable_quota(delta_minus, delta) as u64;
    let mut p = vec![0.0];
    if h == 0 {
        return p;
    }
    p.push(dist.upper_tail(delta_minus));
    for _ in 2..=h {
        let prev = *p.last().unwrap();
        let mut acc = CompensatedSum::new();
        for (n, &xi) in dist.probs().iter().enumerate().skip(delta_minus) {
            if xi > 0.0 {
                acc.add(xi * binomial_tail_geq(n as u64, prev, quota));
            }
        }
        p.push(acc.value());
    }
    p
}

/// `Cover(N) = Pr[every one of `colours` colours is hit]` when each of `N`
/// balls independently lands on a uniform colour with probability `hit`, for
/// `N = 0..=n_max`. Computed by a forward recursion over the number of
/// colours already hit, so no alternating sums appear.
pub fn cover_probabilities(n_max: usize, hit: f64, colours: usize) -> Vec<f64> {
    let mut state = vec![0.0; colours + 1];
    state[0] = 1.0;
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(state[colours]);
    for _ in 0..n_max {
        for c in (0..=colours).rev() {
            let stay = if c == colours {
                1.0
            } else {
                1.0 - hit * (colours - c) as f64 / colours as f64
            };
            let from_below = if c == 0 {
                0.0
            } else {
                state[c - 1] * hit * (colours - c + 1) as f64 / colours as f64
            };
            state[c] = state[c] * stay + from_below;
        }
        out.push(state[colours]);
    }
    out
}

/// `φ_t`, the probability that the root of a height-`t` tree is frozen under a
/// broadcast boundary with `k` colours, for `t = 0..=h`. A frozen root has all
/// `k - 1` other colours present among its frozen children.
pub fn frozen(dist: &OffspringDistribution, k: u32, h: u32) -> Vec<f64> {
    let colours = k as usize - 1;
    let mut phi = vec![1.0];
    for _ in 0..h {
        let prev = *phi.last().unwrap();
        let cover = cover_probabilities(dist.support_max(), prev, colours);
        let mut acc = CompensatedSum::new();
        for (&xi, &c) in dist.probs().iter().zip(&cover) {
            acc.add(xi * c);
        }
        phi.push(acc.value());
    }
    phi
}

/// Joint law of `(mixing flag, M)` at the root of a height-`t` tree, where `M`
/// is the least number of mixing vertices on a path from the root to a
/// depth-`t` node, both endpoints included, and `M = ∞` when no such path
/// exists.
///
/// Stored as survival functions `S_f(m) = Pr[flag = f, M ≥ m]` for
/// `m = 0..=t + 2`, plus the mass at infinity.
#[derive(Clone, Debug, PartialEq)]
pub struct MixingLaw {
    pub height: u32,
    /// `survival[f][m]`, `f = 0` non-mixing, `f = 1` mixing.
    pub survival: [Vec<f64>; 2],
    /// `Pr[flag = f, M = ∞]`.
    pub infinite: [f64; 2],
}

impl MixingLaw {
    fn leaf() -> Self {
        Self {
            height: 0,
            survival: [vec![0.0, 0.0, 0.0], vec![1.0, 1.0, 0.0]],
            infinite: [0.0, 0.0],
        }
    }

    /// `Pr[flag = f, M ≥ m]`, with `m` past the stored range meaning only the
    /// mass at infinity remains.
    pub fn tail(&self, f: usize, m: usize) -> f64 {
        self.survival[f]
            .get(m)
            .copied()
            .unwrap_or(self.infinite[f])
    }

    pub fn mixing_probability(&self) -> f64 {
        self.survival[1][0]
    }

    /// `Pr[M ≥ m]` regardless of the flag.
    pub fn tail_any(&self, m: usize) -> f64 {
        self.tail(0, m) + self.tail(1, m)
    }

    /// Point masses `(flag, M, probability)` with `M = None` for infinity.
    pub fn atoms(&self) -> Vec<(bool, Option<u32>, f64)> {
        let mut atoms = Vec::new();
        for f in 0..2 {
            let s = &self.survival[f];
            for (m, &at) in s.iter().enumerate() {
                let next = self.tail(f, m + 1);
                let mass = (at - next).max(0.0);
                if mass > 0.0 {
                    atoms.push((f == 1, Some(m as u32), mass));
                }
            }
            if self.infinite[f] > 0.0 {
                atoms.push((f == 1, None, self.infinite[f]));
            }
        }
        atoms
    }
}

/// `Σ_{j ≤ J} C(N, j)·a^j·b^{N-j}` for every `N = 0..=n_max`.
fn bounded_count_mass(n_max: usize, a: f64, b: f64, allowance: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let mut acc = CompensatedSum::new();
        for j in 0..=allowance.min(n) {
            let term = if a == 0.0 {
                if j == 0 {
                    pow_int(b, n)
                } else {
                    0.0
                }
            } else if b == 0.0 {
                if j == n {
                    pow_int(a, n)
                } else {
                    0.0
                }
            } else {
                exp(ln_choose(n as u64, j as u64) + j as f64 * log(a) + (n - j) as f64 * log(b))
            };
            acc.add(term);
        }
        out.push(acc.value());
    }
    out
}

fn pow_int(x: f64, n: usize) -> f64 {
    let mut r = 1.0;
    for _ in 0..n {
        r *= x;
    }
    r
}

/// Mixing laws for heights `0..=h`.
pub fn mixing(dist: &OffspringDistribution, h: u32, delta_plus: usize, delta: f64) -> Vec<MixingLaw> {
    let allowance = mixing_allowance(delta_plus, delta);
    let probs = dist.probs();
    let n_max = dist.support_max();
    let mut laws = vec![MixingLaw::leaf()];
    for t in 1..=h {
        let child = laws.last().unwrap();
        let len = t as usize + 3;
        let mut survival = [vec![0.0; len], vec![0.0; len]];

        // Children's minimum path count ≥ m, with the number of non-mixing
        // children tracked through the binomial split a/b.
        let joint = |m: Option<usize>| -> (f64, f64) {
            let (a, b) = match m {
                Some(m) => (child.tail(0, m), child.tail(1, m)),
                None => (child.infinite[0], child.infinite[1]),
            };
            let bounded = bounded_count_mass(n_max.min(delta_plus), a, b, allowance);
            let mut total = CompensatedSum::new();
            let mut mixing_part = CompensatedSum::new();
            let mut power = 1.0;
            for (n, &xi) in probs.iter().enumerate() {
                if xi > 0.0 {
                    total.add(xi * power);
                    if n <= delta_plus {
                        mixing_part.add(xi * bounded[n]);
                    }
                }
                power *= a + b;
            }
            let mixing_part = mixing_part.value();
            ((total.value() - mixing_part).max(0.0), mixing_part)
        };

        let (inf_non, inf_mix) = joint(None);
        let infinite = [inf_non, inf_mix];
        // Node M = flag + min over children, so Pr[flag = f, M ≥ m] uses the
        // children's tail at m - f.
        let mut child_tails = Vec::with_capacity(len + 1);
        for m in 0..=len {
            child_tails.push(joint(Some(m)));
        }
        for m in 0..len {
            survival[0][m] = child_tails[m].0;
            survival[1][m] = if m == 0 { child_tails[0].1 } else { child_tails[m - 1].1 };
        }
        laws.push(MixingLaw {
            height: t,
            survival,
            infinite,
        });
    }
    laws
}

/// Draws an index from a discrete distribution given by `weights` summing to
/// about one.
pub fn draw_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

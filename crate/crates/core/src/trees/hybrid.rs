//! Root-level statistics of trees far too large to build.
//!
//! The top `D` levels of the tree are sampled explicitly. Every node at depth
//! `D` stands for an independent height-`(h - D)` subtree, and its statistic
//! is drawn from the exact law computed in [`super::laws`]. The result has
//! the same distribution as the statistic of a fully sampled height-`h` tree;
//! only the cost changes. With `D = h` the procedure is plain explicit
//! sampling.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::distributions::{OffspringDistribution, OffspringKind};

use super::laws::{draw_index, MixingLaw};
use super::{a_set_requirement, freezable_quota, mixing_allowance, sample_tree, TreeError};

/// Default budget on the expected number of explicitly sampled nodes.
pub const DEFAULT_NODE_BUDGET: f64 = 20_000.0;

/// Largest `D ≤ h` whose expected top-tree size `Σ_{l≤D} d^l` stays within
/// `budget`.
pub fn frontier_depth(dist: &OffspringDistribution, h: u32, budget: f64) -> u32 {
    let d = dist.mean();
    let mut size = 1.0;
    let mut width = 1.0;
    let mut depth = 0;
    while depth < h {
        width *= d;
        if size + width > budget {
            break;
        }
        size += width;
        depth += 1;
    }
    depth
}

/// Samples `(flag, M)` pairs from a [`MixingLaw`].
#[derive(Clone, Debug)]
pub struct MixingSampler {
    atoms: Vec<(bool, Option<u32>)>,
    weights: Vec<f64>,
}

impl MixingSampler {
    pub fn new(law: &MixingLaw) -> Self {
        let (atoms, weights) = law
            .atoms()
            .into_iter()
            .map(|(f, m, w)| ((f, m), w))
            .unzip();
        Self { atoms, weights }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (bool, Option<u32>) {
        self.atoms[draw_index(&self.weights, rng)]
    }
}

/// Draws whether a height-`h` tree lies in `𝒜_{h,ζ}`, sampling the top
/// `depth` levels and drawing each frontier subtree from `frontier`, which
/// must be the mixing law at height `h - depth`.
#[allow(clippy::too_many_arguments)]
pub fn sample_a_membership<R: Rng + ?Sized>(
    dist: &OffspringDistribution,
    h: u32,
    depth: u32,
    zeta: f64,
    delta_plus: usize,
    delta: f64,
    frontier: &MixingSampler,
    rng: &mut R,
    node_cap: usize,
) -> Result<bool, TreeError> {
    let top = sample_tree(dist, depth, rng, node_cap)?;
    let allowance = mixing_allowance(delta_plus, delta);
    let mut mixing = vec![true; top.len()];
    let mut min_count: Vec<Option<u32>> = vec![None; top.len()];
    for v in top.leaves() {
        let (flag, m) = frontier.draw(rng);
        mixing[v] = flag;
        min_count[v] = m;
    }
    for v in (0..top.leaves().start).rev() {
        let children = top.children(v);
        let non_mixing = children.clone().filter(|&u| !mixing[u]).count();
        mixing[v] = children.len() <= delta_plus && non_mixing <= allowance;
        let below = children.filter_map(|u| min_count[u]).min();
        min_count[v] = below.map(|m| m + mixing[v] as u32);
    }
    let need = a_set_requirement(h, zeta);
    Ok(min_count[0].is_none_or(|m| m >= need))
}

/// Draws whether the root of a height-`h` tree (`h ≥ 1`) is freezable.
/// `laws[t]` is the freezable probability at height `t`. The explicit part
/// stops at depth `min(depth, h - 1)`.
#[allow(clippy::too_many_arguments)]
pub fn sample_freezable_root<R: Rng + ?Sized>(
    dist: &OffspringDistribution,
    h: u32,
    depth: u32,
    delta_minus: usize,
    delta: f64,
    laws: &[f64],
    rng: &mut R,
    node_cap: usize,
) -> Result<bool, TreeError> {
    if h == 0 {
        return Err(TreeError::HeightZero);
    }
    let depth = depth.min(h - 1);
    let top = sample_tree(dist, depth, rng, node_cap)?;
    let quota = freezable_quota(delta_minus, delta);
    let p = laws[(h - depth) as usize];
    let mut freezable = vec![false; top.len()];
    for v in top.leaves() {
        freezable[v] = rng.random::<f64>() < p;
    }
    for v in (0..top.leaves().start).rev() {
        let children = top.children(v);
        freezable[v] =
            children.len() >= delta_minus && children.filter(|&u| freezable[u]).count() >= quota;
    }
    Ok(freezable[0])
}

/// Draws `|L_h|` by evolving generation sizes. Binomial and point-mass
/// offspring use exact convolution identities; other laws are summed
/// directly, one draw per individual, up to `max_individuals` per generation.
pub fn sample_leaf_count<R: Rng + ?Sized>(
    dist: &OffspringDistribution,
    h: u32,
    rng: &mut R,
    max_individuals: u64,
) -> Result<u64, TreeError> {
    let mut z: u64 = 1;
    for _ in 0..h {
        if z == 0 {
            return Ok(0);
        }
        z = match *dist.kind() {
            OffspringKind::Deterministic { d } => z.saturating_mul(d as u64),
            OffspringKind::Binomial { n, p } => {
                let trials = z.saturating_mul(n as u64);
                Binomial::new(trials, p)
                    .expect("binomial parameters validated at construction")
                    .sample(rng)
            }
            _ => {
                if z > max_individuals {
                    return Err(TreeError::ResourceLimit {
                        cap: max_individuals as usize,
                    });
                }
                (0..z).map(|_| dist.sample(rng) as u64).sum()
            }
        };
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_seed;
    use crate::trees::{classify_mixing, in_a, laws, DEFAULT_NODE_CAP};

    #[test]
    fn frontier_depth_respects_budget() {
        let dist = OffspringDistribution::deterministic(30);
        assert_eq!(frontier_depth(&dist, 8, DEFAULT_NODE_BUDGET), 2);
        assert_eq!(frontier_depth(&dist, 1, DEFAULT_NODE_BUDGET), 1);
        assert_eq!(frontier_depth(&dist, 8, 0.5), 0);
    }

    #[test]
    fn hybrid_a_membership_agrees_with_explicit() {
        let dist = OffspringDistribution::explicit(&[0.05, 0.15, 0.3, 0.3, 0.2]).unwrap();
        let (h, zeta, dp, delta) = (5u32, 0.25, 3usize, 0.1);
        let laws = laws::mixing(&dist, h, dp, delta);
        let n = 20_000;
        let mut explicit = 0usize;
        let mut hybrid = 0usize;
        let depth = 2;
        let sampler = MixingSampler::new(&laws[(h - depth) as usize]);
        for i in 0..n {
            let t = sample_tree(&dist, h, &mut derive_seed(21, i), DEFAULT_NODE_CAP).unwrap();
            explicit += in_a(&t, &classify_mixing(&t, dp, delta), zeta) as usize;
            hybrid += sample_a_membership(
                &dist,
                h,
                depth,
                zeta,
                dp,
                delta,
                &sampler,
                &mut derive_seed(22, i),
                DEFAULT_NODE_CAP,
            )
            .unwrap() as usize;
        }
        let a = explicit as f64 / n as f64;
        let b = hybrid as f64 / n as f64;
        let sigma = libm::sqrt((a * (1.0 - a) + b * (1.0 - b)) / n as f64);
        assert!((a - b).abs() < 4.0 * sigma, "{a} vs {b}");
    }

    #[test]
    fn leaf_count_point_mass() {
        let dist = OffspringDistribution::deterministic(3);
        assert_eq!(sample_leaf_count(&dist, 4, &mut derive_seed(0, 0), 1000).unwrap(), 81);
    }

    #[test]
    fn leaf_count_explicit_mean() {
        let dist = OffspringDistribution::explicit(&[0.25, 0.25, 0.5]).unwrap();
        let n = 20_000;
        let total: u64 = (0..n)
            .map(|i| sample_leaf_count(&dist, 3, &mut derive_seed(5, i), 1 << 20).unwrap())
            .sum();
        let mean = total as f64 / n as f64;
        let expected = libm::pow(1.25, 3.0);
        assert!((mean - expected).abs() < 0.05, "{mean}");
    }
}

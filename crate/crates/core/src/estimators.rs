//! Monte Carlo estimators over random trees and boundaries.
//!
//! Every estimator takes a master seed. Sample `i` draws all of its
//! randomness from `derive_seed(seed, i)`, and an [`Executor`] returns the
//! per-sample results in index order, so the reduction is the same sequence
//! of floating-point operations whatever the schedule.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use thiserror::Error;

use crate::colouring::{
    allowed_sets, broadcast, classify_nonbiasing, in_u_w, root_marginal, subtree_marginals, Boundary,
    ColouringError,
};
use crate::distributions::OffspringDistribution;
use crate::math::exp;
use crate::rng::derive_seed;
use crate::stats::{Estimate, MeanAccumulator};
use crate::thresholds::LogBase;
use crate::trees::hybrid::{
    frontier_depth, sample_a_membership, sample_freezable_root, sample_leaf_count, MixingSampler, DEFAULT_NODE_BUDGET,
};
use crate::trees::{classify_mixing, laws, sample_tree, Tree, TreeError, DEFAULT_NODE_CAP};

/// Runs `f(0), …, f(n - 1)` and returns the results in index order.
pub trait Executor {
    fn map_indexed<T, F>(&self, n: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync;
}

/// Runs every index on the calling thread.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map_indexed<T, F>(&self, n: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync,
    {
        (0..n).map(f).collect()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Colouring(#[from] ColouringError),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
}

fn invalid(name: &'static str, reason: &'static str) -> EstimatorError {
    EstimatorError::InvalidParameter { name, reason }
}

/// Resource knobs shared by the estimators.
#[derive(Clone, Copy, Debug)]
pub struct SamplingConfig {
    /// Hard cap on nodes in any explicitly sampled tree.
    pub node_cap: usize,
    /// Expected-size budget for the explicit top of a hybrid sample.
    pub node_budget: f64,
    /// Cap on one generation when leaf counts are summed individual by
    /// individual.
    pub max_individuals: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            node_cap: DEFAULT_NODE_CAP,
            node_budget: DEFAULT_NODE_BUDGET,
            max_individuals: DEFAULT_NODE_CAP as u64,
        }
    }
}

fn collect<I: IntoIterator<Item = Result<T, EstimatorError>>, T>(items: I) -> Result<Vec<T>, EstimatorError> {
    items.into_iter().collect()
}

/// Moments of the magnetization `Y = μ(root = c | boundary) - 1/k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MagnetizationStats {
    pub k: u32,
    pub c: u32,
    pub n_samples: u64,
    /// `E|Y|` with the boundary drawn from the free measure.
    pub mean_abs_y: Estimate,
    /// `E[Y²]` with the boundary drawn from the free measure.
    pub mean_y_sq: Estimate,
    /// `E[Y]` with the boundary drawn from the measure with root colour `c`.
    pub cond_mean_y: Estimate,
    /// Per-sample `Y_cond - k·Y²` on the same tree, whose mean is zero.
    pub identity_gap: Estimate,
}

/// For each of `n` trees: a boundary broadcast from a uniform root colour
/// gives `|Y|` and `Y²`, and a boundary broadcast from root colour `c` gives
/// `Y`. Every `Y` is evaluated with the exact root marginal.
#[allow(clippy::too_many_arguments)]
pub fn magnetization_stats<E: Executor>(
    exec: &E,
    dist: &OffspringDistribution,
    k: u32,
    h: u32,
    c: u32,
    n: u64,
    seed: u64,
    config: &SamplingConfig,
) -> Result<MagnetizationStats, EstimatorError> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    if c >= k {
        return Err(invalid("c", "must be below k"));
    }
    let inv_k = 1.0 / k as f64;
    let samples = collect(exec.map_indexed(n, |i| {
        let mut rng = derive_seed(seed, i);
        let tree = sample_tree(dist, h, &mut rng, config.node_cap)?;
        let root = rng.random_range(0..k);
        let free = broadcast(&tree, k, root, &mut rng)?.boundary(&tree);
        let y = root_marginal(&tree, k, &free)?.get(c) - inv_k;
        let fixed = broadcast(&tree, k, c, &mut rng)?.boundary(&tree);
        let y_cond = root_marginal(&tree, k, &fixed)?.get(c) - inv_k;
        Ok((y, y_cond))
    }))?;
    let mut abs_y = MeanAccumulator::new();
    let mut y_sq = MeanAccumulator::new();
    let mut cond = MeanAccumulator::new();
    let mut gap = MeanAccumulator::new();
    for (y, y_cond) in samples {
        abs_y.push(y.abs());
        y_sq.push(y * y);
        cond.push(y_cond);
        gap.push(y_cond - k as f64 * y * y);
    }
    Ok(MagnetizationStats {
        k,
        c,
        n_samples: n,
        mean_abs_y: abs_y.estimate(),
        mean_y_sq: y_sq.estimate(),
        cond_mean_y: cond.estimate(),
        identity_gap: gap.estimate(),
    })
}

/// The non-reconstruction statistic `(k/2)·Σ_c E|Y_c|`.
#[derive(Clone, Debug, PartialEq)]
pub struct NonreconEstimate {
    /// Direct average of `(k/2)·Σ_c |Y_c|` over samples.
    pub direct: Estimate,
    /// `(k/2)·Σ_c sqrt(E[Y_c²])`, the Cauchy-Schwarz upper bound on the
    /// direct statistic.
    pub second_moment_bound: f64,
}

/// Estimates `(k/2)·Σ_c E|Y_c|` with boundaries drawn from the free measure.
/// One exact root marginal per sample yields `Y_c` for every colour.
pub fn nonrecon_estimate<E: Executor>(
    exec: &E,
    dist: &OffspringDistribution,
    k: u32,
    h: u32,
    n: u64,
    seed: u64,
    config: &SamplingConfig,
) -> Result<NonreconEstimate, EstimatorError> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    let inv_k = 1.0 / k as f64;
    let samples = collect(exec.map_indexed(n, |i| {
        let mut rng = derive_seed(seed, i);
        let tree = sample_tree(dist, h, &mut rng, config.node_cap)?;
        let root = rng.random_range(0..k);
        let boundary = broadcast(&tree, k, root, &mut rng)?.boundary(&tree);
        let marginal = root_marginal(&tree, k, &boundary)?;
        Ok(marginal.probs().iter().map(|p| p - inv_k).collect::<Vec<f64>>())
    }))?;
    let mut direct = MeanAccumulator::new();
    let mut squares = vec![MeanAccumulator::new(); k as usize];
    for ys in &samples {
        direct.push(0.5 * k as f64 * ys.iter().map(|y| y.abs()).sum::<f64>());
        for (acc, y) in squares.iter_mut().zip(ys) {
            acc.push(y * y);
        }
    }
    let bound = 0.5 * k as f64 * squares.iter().map(|a| libm::sqrt(a.mean())).sum::<f64>();
    Ok(NonreconEstimate {
        direct: direct.estimate(),
        second_moment_bound: bound,
    })
}

/// Frozen-root rates under broadcast boundaries with a fixed root colour.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrozenEstimate {
    pub n_trees: u64,
    pub n_boundaries_per_tree: u64,
    pub n_surviving: u64,
    /// Fraction of boundaries that freeze the root, over surviving trees.
    pub frozen_rate: f64,
    /// Same, with extinct trees counted as unfrozen.
    pub frozen_rate_uncond: f64,
    /// Fraction of trees with no depth-`h` node.
    pub extinct_rate: f64,
    /// Standard error of `frozen_rate`, treating each tree's boundaries as one
    /// cluster.
    pub std_error: f64,
    /// Standard error of `frozen_rate_uncond`.
    pub std_error_uncond: f64,
}

/// Per tree: extinct or not, and how many of the boundaries froze the root.
#[allow(clippy::too_many_arguments)]
fn frozen_tree_sample<R: Rng + ?Sized>(
    dist: &OffspringDistribution,
    k: u32,
    depth: u32,
    survive: f64,
    frozen_given_survival: f64,
    n_boundaries: u64,
    rng: &mut R,
    node_cap: usize,
) -> Result<Option<u64>, EstimatorError> {
    let top = sample_tree(dist, depth, rng, node_cap)?;
    let frontier = top.leaves();
    let alive: Vec<bool> = frontier.clone().map(|_| rng.random::<f64>() < survive).collect();
    if !alive.iter().any(|&a| a) {
        return Ok(None);
    }
    let full = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
    let mut frozen = vec![false; top.len()];
    let mut hits = 0;
    for _ in 0..n_boundaries {
        let colouring = broadcast(&top, k, 0, rng)?;
        for (v, &a) in frontier.clone().zip(&alive) {
            frozen[v] = a && rng.random::<f64>() < frozen_given_survival;
        }
        for v in (0..frontier.start).rev() {
            let forbidden = top
                .children(v)
                .filter(|&u| frozen[u])
                .fold(0u64, |s, u| s | 1 << colouring.colour(u));
            frozen[v] = (full & !forbidden).count_ones() == 1;
        }
        hits += frozen[0] as u64;
    }
    Ok(Some(hits))
}

/// Samples `n_trees` trees and, per surviving tree, `n_boundaries` broadcast
/// boundaries from root colour 0, and records how often the boundary forces
/// the root colour.
///
/// When the full tree would exceed the node budget, the top levels are
/// sampled explicitly and each frontier subtree is drawn from the exact law
/// of (survival, frozen given colour); the survival of a frontier subtree is
/// drawn once per tree and its frozen state once per boundary.
#[allow(clippy::too_many_arguments)]
pub fn frozen_probability<E: Executor>(
    exec: &E,
    dist: &OffspringDistribution,
    k: u32,
    h: u32,
    n_trees: u64,
    n_boundaries: u64,
    seed: u64,
    config: &SamplingConfig,
) -> Result<FrozenEstimate, EstimatorError> {
    if h == 0 {
        return Err(invalid("h", "must be at least 1"));
    }
    if !(2..=64).contains(&k) {
        return Err(invalid("k", "must lie in 2..=64"));
    }
    if n_trees == 0 || n_boundaries == 0 {
        return Err(invalid("n_trees", "trees and boundaries must be positive"));
    }
    let depth = frontier_depth(dist, h, config.node_budget);
    let t = h - depth;
    let survive = laws::survival(dist, t)[t as usize];
    let phi = laws::frozen(dist, k, t)[t as usize];
    let given = if survive > 0.0 { (phi / survive).min(1.0) } else { 0.0 };

    let per_tree = collect(exec.map_indexed(n_trees, |i| {
        let mut rng = derive_seed(seed, i);
        frozen_tree_sample(dist, k, depth, survive, given, n_boundaries, &mut rng, config.node_cap)
    }))?;

    let nb = n_boundaries as f64;
    let mut conditional = MeanAccumulator::new();
    let mut unconditional = MeanAccumulator::new();
    let mut extinct = 0u64;
    for outcome in per_tree {
        match outcome {
            Some(hits) => {
                conditional.push(hits as f64 / nb);
                unconditional.push(hits as f64 / nb);
            }
            None => {
                extinct += 1;
                unconditional.push(0.0);
            }
        }
    }
    let surviving = n_trees - extinct;
    Ok(FrozenEstimate {
        n_trees,
        n_boundaries_per_tree: n_boundaries,
        n_surviving: surviving,
        frozen_rate: if surviving > 0 { conditional.mean() } else { 0.0 },
        frozen_rate_uncond: unconditional.mean(),
        extinct_rate: extinct as f64 / n_trees as f64,
        std_error: conditional.std_error(),
        std_error_uncond: unconditional.std_error(),
    })
}

/// `D = (f/(k-1))·(1 - 1/log k)` and `s = 1/k²` of the `P_h` recursion.
fn p_h_constants(k: u32, f_size: f64, base: LogBase) -> (f64, f64) {
    let kf = k as f64;
    let d = f_size / (kf - 1.0) * (1.0 - 1.0 / base.log(kf));
    (d, 1.0 / (kf * kf))
}

/// `f(x) = (1 - exp(-x·D))^{k-1} - s`.
pub fn p_h_map(k: u32, f_size: f64, base: LogBase, x: f64) -> f64 {
    let (d, s) = p_h_constants(k, f_size, base);
    libm::pow(1.0 - exp(-x * d), (k - 1) as f64) - s
}

/// `P_0 = 1`, `P_h = max(0, f(P_{h-1}))` for `h = 1..=h_max`.
pub fn p_h_lower_sequence(k: u32, f_size: f64, h_max: u32, base: LogBase) -> Vec<f64> {
    let mut seq = vec![1.0];
    for _ in 0..h_max {
        let prev = *seq.last().unwrap();
        seq.push(p_h_map(k, f_size, base, prev).max(0.0));
    }
    seq
}

/// Fraction of `n` trees in `𝒜_{h,ζ}`.
#[allow(clippy::too_many_arguments)]
pub fn a_membership_rate<E: Executor>(
    exec: &E,
    dist: &OffspringDistribution,
    h: u32,
    zeta: f64,
    delta_plus: usize,
    delta: f64,
    n: u64,
    seed: u64,
    config: &SamplingConfig,
) -> Result<Estimate, EstimatorError> {
    if !(zeta > 0.0 && zeta < 1.0) {
        return Err(invalid("zeta", "must lie in (0, 1)"));
    }
    let depth = frontier_depth(dist, h, config.node_budget);
    let all_laws = laws::mixing(dist, h - depth, delta_plus, delta);
    let sampler = MixingSampler::new(&all_laws[(h - depth) as usize]);
    let hits = collect(exec.map_indexed(n, |i| {
        let mut rng = derive_seed(seed, i);
        Ok(sample_a_membership(
            dist,
            h,
            depth,
            zeta,
            delta_plus,
            delta,
            &sampler,
            &mut rng,
            config.node_cap,
        )?)
    }))?;
    Ok(hits.into_iter().map(|b| b as u8 as f64).collect::<MeanAccumulator>().estimate())
}

/// Fraction of `n` trees whose root is freezable.
#[allow(clippy::too_many_arguments)]
pub fn freezable_rate<E: Executor>(
    exec: &E,
    dist: &OffspringDistribution,
    h: u32,
    delta_minus: usize,
    delta: f64,
    n: u64,
    seed: u64,
    config: &SamplingConfig,
) -> Result<Estimate, EstimatorError> {
    if h == 0 {
        return Err(invalid("h", "must be at least 1"));
    }
    let depth = frontier_depth(dist, h, config.node_budget);
    let law = laws::freezable(dist, h, delta_minus, delta);
    let hits = collect(exec.map_indexed(n, |i| {
        let mut rng = derive_seed(seed, i);
        Ok(sample_freezable_root(
            dist,
            h,
            depth,
            delta_minus,
            delta,
            &law,
            &mut rng,
            config.node_cap,
        )?)
    }))?;
    Ok(hits.into_iter().map(|b| b as u8 as f64).collect::<MeanAccumulator>().estimate())
}

/// Sample mean of `|L_h|` over `n` trees.
pub fn leaf_count_stats<E: Executor>(
    exec: &E,
    dist: &OffspringDistribution,
    h: u32,
    n: u64,
    seed: u64,
    config: &SamplingConfig,
) -> Result<Estimate, EstimatorError> {
    let counts = collect(exec.map_indexed(n, |i| {
        let mut rng = derive_seed(seed, i);
        Ok(sample_leaf_count(dist, h, &mut rng, config.max_individuals)?)
    }))?;
    Ok(counts.into_iter().map(|c| c as f64).collect::<MeanAccumulator>().estimate())
}

/// Optional restriction of [`disagreement_decay`] to boundary pairs that are
/// both in `𝒰_w`.
#[derive(Clone, Copy, Debug)]
pub struct NonbiasFilter {
    pub delta_plus: usize,
    pub delta: f64,
    pub gamma: f64,
    /// Fraction of the height covered by `𝒰_w`, `3/4` by default.
    pub fraction: f64,
}

/// Per-vertex disagreement along the leftmost root-leaf path.
#[derive(Clone, Debug, PartialEq)]
pub struct DisagreementDecay {
    /// The path, root first.
    pub path: Vec<usize>,
    /// `per_vertex[j]`: mean total variation between the subtree marginals at
    /// `path[j]` under the two boundaries.
    pub per_vertex: Vec<Estimate>,
    pub accepted: u64,
    pub total: u64,
}

/// `‖μ^a - μ^b‖` at each vertex of `path`, for the subtree below that vertex.
pub fn path_disagreement(
    tree: &Tree,
    k: u32,
    a: &Boundary,
    b: &Boundary,
    path: &[usize],
) -> Result<Vec<f64>, EstimatorError> {
    let ma = subtree_marginals(tree, k, a)?;
    let mb = subtree_marginals(tree, k, b)?;
    Ok(path.iter().map(|&v| ma[v].total_variation(&mb[v])).collect())
}

/// Runs `n` experiments on a fixed tree. Each draws a boundary `σ` by
/// broadcast from a uniform root colour, and builds `τ` by recolouring the
/// leaf `w` at the end of the leftmost path to a colour different from both
/// `σ(w)` and the colour of its parent, so `τ` is again the boundary of a
/// proper colouring. For every vertex `v` on the path it records
/// `‖μ^σ - μ^τ‖` at `v` for the subtree below `v`.
pub fn disagreement_decay<E: Executor>(
    exec: &E,
    tree: &Tree,
    k: u32,
    n: u64,
    seed: u64,
    filter: Option<NonbiasFilter>,
) -> Result<DisagreementDecay, EstimatorError> {
    if k < 3 {
        return Err(invalid("k", "needs at least 3 colours"));
    }
    let w = tree
        .leftmost_leaf()
        .ok_or(invalid("tree", "needs a depth-h node"))?;
    let path = tree.path_to(w);
    let leaf_index = w - tree.leaves().start;
    let mixing = filter.map(|f| classify_mixing(tree, f.delta_plus, f.delta));

    let runs = collect(exec.map_indexed(n, |i| {
        let mut rng = derive_seed(seed, i);
        let root = rng.random_range(0..k);
        let colouring = broadcast(tree, k, root, &mut rng)?;
        let sigma = colouring.boundary(tree);
        let own = colouring.colour(w);
        let parent = tree.parent(w).map(|p| colouring.colour(p));
        let choices: Vec<u32> = (0..k).filter(|&c| c != own && Some(c) != parent).collect();
        let alt = choices[rng.random_range(0..choices.len())];
        let tau = sigma.with_colour(leaf_index, alt)?;
        if let (Some(f), Some(mixing)) = (filter, mixing.as_ref()) {
            for b in [&sigma, &tau] {
                let nb = classify_nonbiasing(tree, b, f.delta_plus, f.delta, f.gamma, mixing)?;
                if !in_u_w(tree, &nb, mixing, w, f.fraction) {
                    return Ok(None);
                }
            }
        }
        Ok(Some(path_disagreement(tree, k, &sigma, &tau, &path)?))
    }))?;

    let mut per_vertex = vec![MeanAccumulator::new(); path.len()];
    let mut accepted = 0;
    for tvs in runs.into_iter().flatten() {
        accepted += 1;
        for (acc, tv) in per_vertex.iter_mut().zip(tvs) {
            acc.push(tv);
        }
    }
    Ok(DisagreementDecay {
        path,
        per_vertex: per_vertex.iter().map(|a| a.estimate()).collect(),
        accepted,
        total: n,
    })
}

/// Fraction of broadcast boundaries (root colour 0) that freeze the root of a
/// fixed tree.
pub fn frozen_rate_on_tree<E: Executor>(
    exec: &E,
    tree: &Tree,
    k: u32,
    n: u64,
    seed: u64,
) -> Result<Estimate, EstimatorError> {
    let hits = collect(exec.map_indexed(n, |i| {
        let mut rng = derive_seed(seed, i);
        let b = broadcast(tree, k, 0, &mut rng)?.boundary(tree);
        Ok(allowed_sets(tree, k, &b)?.is_freezing())
    }))?;
    Ok(hits.into_iter().map(|b| b as u8 as f64).collect::<MeanAccumulator>().estimate())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_height_zero() {
        let dist = OffspringDistribution::deterministic(3);
        let cfg = SamplingConfig::default();
        let m = magnetization_stats(&Sequential, &dist, 4, 0, 1, 50, 1, &cfg).unwrap();
        assert!((m.cond_mean_y.mean - 0.75).abs() < 1e-15);
        let nr = nonrecon_estimate(&Sequential, &dist, 5, 0, 50, 1, &cfg).unwrap();
        assert!((nr.direct.mean - 4.0).abs() < 1e-12);
    }

    #[test]
    fn p_h_sequence_starts_at_one_and_is_monotone() {
        let seq = p_h_lower_sequence(6, 30.0 - libm::pow(30.0, 0.1), 8, LogBase::Two);
        assert_eq!(seq[0], 1.0);
        assert!(seq.windows(2).all(|w| w[1] <= w[0]));
        let bigger = p_h_lower_sequence(6, 60.0, 8, LogBase::Two);
        assert!(bigger.iter().zip(&seq).all(|(b, s)| b >= s));
    }

    #[test]
    fn pigeonhole_star_never_freezes() {
        let dist = OffspringDistribution::deterministic(4);
        let cfg = SamplingConfig::default();
        let est = frozen_probability(&Sequential, &dist, 7, 1, 200, 5, 3, &cfg).unwrap();
        assert_eq!(est.frozen_rate, 0.0);
        assert_eq!(est.extinct_rate, 0.0);
    }

    #[test]
    fn hybrid_frozen_matches_explicit() {
        let dist = OffspringDistribution::explicit(&[0.05, 0.1, 0.2, 0.3, 0.2, 0.15]).unwrap();
        let (k, h) = (3u32, 4u32);
        let explicit_cfg = SamplingConfig {
            node_budget: f64::INFINITY,
            ..SamplingConfig::default()
        };
        let hybrid_cfg = SamplingConfig {
            node_budget: 10.0,
            ..SamplingConfig::default()
        };
        let a = frozen_probability(&Sequential, &dist, k, h, 20_000, 1, 5, &explicit_cfg).unwrap();
        let b = frozen_probability(&Sequential, &dist, k, h, 20_000, 1, 6, &hybrid_cfg).unwrap();
        let sigma = libm::sqrt(a.std_error_uncond.powi(2) + b.std_error_uncond.powi(2));
        assert!((a.frozen_rate_uncond - b.frozen_rate_uncond).abs() < 4.0 * sigma);
        let sigma = libm::sqrt(
            a.extinct_rate * (1.0 - a.extinct_rate) / 20_000.0 + b.extinct_rate * (1.0 - b.extinct_rate) / 20_000.0,
        );
        assert!((a.extinct_rate - b.extinct_rate).abs() < 4.0 * sigma.max(1e-9));
    }

    #[test]
    fn identical_boundaries_do_not_disagree() {
        let tree = Tree::complete(2, 3);
        let b = broadcast(&tree, 4, 0, &mut derive_seed(0, 0)).unwrap().boundary(&tree);
        let path = tree.path_to(tree.leftmost_leaf().unwrap());
        let tv = path_disagreement(&tree, 4, &b, &b, &path).unwrap();
        assert!(tv.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn changed_leaf_disagrees_fully() {
        let tree = Tree::complete(2, 3);
        let d = disagreement_decay(&Sequential, &tree, 5, 200, 1, None).unwrap();
        assert_eq!(d.per_vertex.len(), 4);
        assert!((d.per_vertex[3].mean - 1.0).abs() < 1e-12);
        assert!(d.per_vertex[0].mean < d.per_vertex[3].mean);
    }
}

//! Brute-force ground truth on tiny trees.
//!
//! Proper colourings are enumerated by mixed-radix counting: the root takes
//! each of the `k` colours, and every other node a digit in `0..k-1` that is
//! shifted past its parent's colour. Each step is linear in the tree size and
//! no colouring is ever rejected.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use thiserror::Error;

use crate::colouring::{Boundary, Marginal};
use crate::trees::Tree;

/// Cap on the number of colourings a single enumeration may visit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumerationLimit {
    pub max_total_colourings: u64,
}

impl Default for EnumerationLimit {
    fn default() -> Self {
        Self {
            max_total_colourings: 10_000_000,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("enumeration needs {needed} colourings, above the limit of {limit}")]
    LimitExceeded { needed: u128, limit: u64 },
    #[error("no proper colouring extends the boundary")]
    InconsistentBoundary,
    #[error("k = {0} is out of range; need 2 <= k <= 64")]
    InvalidK(u32),
    #[error("colour {0} is not below k")]
    InvalidColour(u32),
    #[error("boundary size does not match the number of depth-h nodes")]
    BoundarySize,
    #[error("child counts do not describe a tree")]
    InvalidShape,
    #[error("enumerated {found} colourings, expected {expected}")]
    SelfCheck { found: u64, expected: u64 },
}

/// `k·(k-1)^{n-1}`, the number of proper colourings of an `n`-node tree.
pub fn tree_colouring_count(n: usize, k: u32) -> u128 {
    let mut total = k as u128;
    for _ in 1..n {
        total = total.saturating_mul(k as u128 - 1);
    }
    total
}

fn check(tree: &Tree, k: u32, limit: EnumerationLimit) -> Result<u64, OracleError> {
    if !(2..=64).contains(&k) {
        return Err(OracleError::InvalidK(k));
    }
    let needed = tree_colouring_count(tree.len(), k);
    if needed > limit.max_total_colourings as u128 {
        return Err(OracleError::LimitExceeded {
            needed,
            limit: limit.max_total_colourings,
        });
    }
    Ok(needed as u64)
}

/// Calls `visit` on every proper colouring of `tree`.
pub fn for_each_colouring(
    tree: &Tree,
    k: u32,
    limit: EnumerationLimit,
    mut visit: impl FnMut(&[u8]),
) -> Result<u64, OracleError> {
    check(tree, k, limit)?;
    let n = tree.len();
    let parents: Vec<usize> = (1..n).map(|v| tree.parent(v).unwrap()).collect();
    let mut digits = vec![0u8; n];
    let mut colours = vec![0u8; n];
    let base = (k - 1) as u8;
    let mut visited = 0u64;
    for root in 0..k as u8 {
        digits.iter_mut().for_each(|d| *d = 0);
        loop {
            colours[0] = root;
            for v in 1..n {
                let p = colours[parents[v - 1]];
                let d = digits[v];
                colours[v] = if d >= p { d + 1 } else { d };
            }
            visit(&colours);
            visited += 1;
            let mut pos = n - 1;
            let exhausted = loop {
                if pos == 0 {
                    break true;
                }
                digits[pos] += 1;
                if digits[pos] < base {
                    break false;
                }
                digits[pos] = 0;
                pos -= 1;
            };
            if exhausted {
                break;
            }
        }
    }
    Ok(visited)
}

/// Exact number of proper colourings, checked against `k·(k-1)^{n-1}`.
pub fn count_proper_colourings(tree: &Tree, k: u32, limit: EnumerationLimit) -> Result<u64, OracleError> {
    let expected = check(tree, k, limit)?;
    let found = for_each_colouring(tree, k, limit, |_| {})?;
    if found != expected {
        return Err(OracleError::SelfCheck { found, expected });
    }
    Ok(found)
}

/// For each leaf pattern, the number of proper colourings producing it, split
/// by root colour.
#[derive(Clone, Debug)]
pub struct LeafPatternTable {
    k: u32,
    n_nodes: usize,
    counts: BTreeMap<Vec<u8>, Vec<u64>>,
}

impl LeafPatternTable {
    pub fn build(tree: &Tree, k: u32, limit: EnumerationLimit) -> Result<Self, OracleError> {
        let leaves = tree.leaves();
        let mut counts: BTreeMap<Vec<u8>, Vec<u64>> = BTreeMap::new();
        for_each_colouring(tree, k, limit, |colours| {
            let entry = counts
                .entry(colours[leaves.clone()].to_vec())
                .or_insert_with(|| vec![0; k as usize]);
            entry[colours[0] as usize] += 1;
        })?;
        Ok(Self {
            k,
            n_nodes: tree.len(),
            counts,
        })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Number of distinct leaf patterns.
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// `(pattern, per-root-colour counts)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (&[u8], &[u64])> {
        self.counts.iter().map(|(p, c)| (p.as_slice(), c.as_slice()))
    }

    /// Counts for one pattern, or `None` when no proper colouring produces it.
    pub fn get(&self, pattern: &[u8]) -> Option<&[u64]> {
        self.counts.get(pattern).map(|c| c.as_slice())
    }

    /// `T = k·(k-1)^{n-1}`.
    pub fn total(&self) -> u64 {
        tree_colouring_count(self.n_nodes, self.k) as u64
    }

    /// Exact root marginal given a leaf pattern, as fractions.
    pub fn root_marginal_rational(&self, pattern: &[u8]) -> Result<Vec<BigRational>, OracleError> {
        let counts = self.get(pattern).ok_or(OracleError::InconsistentBoundary)?;
        let n: u64 = counts.iter().sum();
        Ok(counts
            .iter()
            .map(|&c| BigRational::new(BigInt::from(c), BigInt::from(n)))
            .collect())
    }

    pub fn root_marginal(&self, pattern: &[u8]) -> Result<Marginal, OracleError> {
        let counts = self.get(pattern).ok_or(OracleError::InconsistentBoundary)?;
        let n: u64 = counts.iter().sum();
        Ok(Marginal::new(counts.iter().map(|&c| c as f64 / n as f64).collect()))
    }
}

fn pattern_of(tree: &Tree, k: u32, boundary: &Boundary) -> Result<Vec<u8>, OracleError> {
    if boundary.k() != k {
        return Err(OracleError::InvalidK(boundary.k()));
    }
    if boundary.len() != tree.leaf_count() {
        return Err(OracleError::BoundarySize);
    }
    Ok(boundary.as_slice().to_vec())
}

/// Root distribution among all proper colourings that agree with the boundary.
pub fn exact_root_marginal(
    tree: &Tree,
    k: u32,
    boundary: &Boundary,
    limit: EnumerationLimit,
) -> Result<Marginal, OracleError> {
    let pattern = pattern_of(tree, k, boundary)?;
    let leaves = tree.leaves();
    let mut counts = vec![0u64; k as usize];
    for_each_colouring(tree, k, limit, |colours| {
        if colours[leaves.clone()] == pattern[..] {
            counts[colours[0] as usize] += 1;
        }
    })?;
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(OracleError::InconsistentBoundary);
    }
    Ok(Marginal::new(counts.iter().map(|&c| c as f64 / n as f64).collect()))
}

/// `‖μ^i - μ^j‖` on the leaf configurations, as a fraction.
pub fn exact_leaf_tv_rational(
    tree: &Tree,
    k: u32,
    i: u32,
    j: u32,
    limit: EnumerationLimit,
) -> Result<BigRational, OracleError> {
    if i >= k {
        return Err(OracleError::InvalidColour(i));
    }
    if j >= k {
        return Err(OracleError::InvalidColour(j));
    }
    let table = LeafPatternTable::build(tree, k, limit)?;
    let per_root = table.total() / k as u64;
    let diff: u64 = table
        .iter()
        .map(|(_, c)| c[i as usize].abs_diff(c[j as usize]))
        .sum();
    Ok(BigRational::new(BigInt::from(diff), BigInt::from(2 * per_root)))
}

/// `‖μ^i - μ^j‖` on the leaf configurations.
pub fn exact_leaf_tv(tree: &Tree, k: u32, i: u32, j: u32, limit: EnumerationLimit) -> Result<f64, OracleError> {
    Ok(exact_leaf_tv_rational(tree, k, i, j, limit)?
        .to_f64()
        .unwrap_or(f64::NAN))
}

/// Exact `(E|Y|, E[Y²], E_c[Y])` for `Y = μ(root = c | σ_L) - 1/k`, with `σ_L`
/// distributed as the leaves of a uniform proper colouring for the first two
/// and of one with root colour `c` for the third.
#[derive(Clone, Debug, PartialEq)]
pub struct MagnetizationMoments {
    pub mean_abs_y: BigRational,
    pub mean_y_sq: BigRational,
    pub cond_mean_y: BigRational,
}

impl MagnetizationMoments {
    pub fn to_f64(&self) -> (f64, f64, f64) {
        let f = |x: &BigRational| x.to_f64().unwrap_or(f64::NAN);
        (f(&self.mean_abs_y), f(&self.mean_y_sq), f(&self.cond_mean_y))
    }
}

/// Moments from a prebuilt table. With `T = k(k-1)^{n-1}`, `n_σ` the number
/// of colourings with leaf pattern `σ` and `n_σc` those among them with root
/// colour `c`:
///
/// - `E|Y| = (1/(kT))·Σ |k·n_σc - n_σ|`
/// - `E[Y²] = (1/(k²T))·Σ (k·n_σc - n_σ)² / n_σ`
/// - `E_c[Y] = (1/T)·Σ n_σc·(k·n_σc - n_σ) / n_σ`
///
/// Terms with equal `n_σ` are summed as integers before any division.
pub fn magnetization_moments_from_table(table: &LeafPatternTable, c: u32) -> Result<MagnetizationMoments, OracleError> {
    let k = table.k();
    if c >= k {
        return Err(OracleError::InvalidColour(c));
    }
    let kb = BigInt::from(k);
    let total = BigInt::from(table.total());
    let mut abs_sum = BigInt::zero();
    let mut sq_by_n: BTreeMap<u64, BigInt> = BTreeMap::new();
    let mut cond_by_n: BTreeMap<u64, BigInt> = BTreeMap::new();
    for (_, counts) in table.iter() {
        let n: u64 = counts.iter().sum();
        let nc = counts[c as usize];
        let centred = BigInt::from(k as i128 * nc as i128 - n as i128);
        abs_sum += num_traits::Signed::abs(&centred);
        *sq_by_n.entry(n).or_insert_with(BigInt::zero) += &centred * &centred;
        *cond_by_n.entry(n).or_insert_with(BigInt::zero) += BigInt::from(nc) * &centred;
    }
    let fold = |groups: BTreeMap<u64, BigInt>| {
        groups
            .into_iter()
            .fold(BigRational::zero(), |acc, (n, num)| acc + BigRational::new(num, BigInt::from(n)))
    };
    let mean_abs_y = BigRational::new(abs_sum, &kb * &total);
    let mean_y_sq = fold(sq_by_n) / BigRational::from_integer(&kb * &kb * &total);
    let cond_mean_y = fold(cond_by_n) / BigRational::from_integer(total);
    Ok(MagnetizationMoments {
        mean_abs_y,
        mean_y_sq,
        cond_mean_y,
    })
}

/// Exact magnetization moments by full enumeration.
pub fn exact_magnetization_moments(
    tree: &Tree,
    k: u32,
    c: u32,
    limit: EnumerationLimit,
) -> Result<MagnetizationMoments, OracleError> {
    let table = LeafPatternTable::build(tree, k, limit)?;
    magnetization_moments_from_table(&table, c)
}

/// Builds a tree from breadth-first child counts, with the height set to the
/// deepest level so that the boundary is never empty.
pub fn tree_from_counts(counts: &[usize]) -> Result<Tree, OracleError> {
    let mut depth = vec![0u32; counts.len()];
    let mut next = 1;
    for (v, &c) in counts.iter().enumerate() {
        for u in next..(next + c).min(counts.len()) {
            depth[u] = depth[v] + 1;
        }
        next += c;
    }
    let height = depth.iter().copied().max().unwrap_or(0);
    Tree::from_child_counts(counts, height).map_err(|_| OracleError::InvalidShape)
}

/// Every ordered rooted tree with `n ≥ 1` nodes. There are `Catalan(n - 1)`
/// of them.
pub fn all_shapes(n: usize) -> Vec<Tree> {
    fn extend(counts: &mut Vec<usize>, n: usize, remaining: usize, out: &mut Vec<Tree>) {
        let v = counts.len();
        if v == n {
            if remaining == 0 {
                out.push(tree_from_counts(counts).expect("enumerated counts are valid"));
            }
            return;
        }
        let discovered = n - remaining;
        for c in 0..=remaining {
            if v + 1 < n && discovered + c < v + 2 {
                continue;
            }
            counts.push(c);
            extend(counts, n, remaining - c, out);
            counts.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        extend(&mut Vec::with_capacity(n), n, n - 1, &mut out);
    }
    out
}

/// A random recursive tree on `n ≥ 1` nodes: node `i` attaches to a uniform
/// earlier node.
pub fn random_shape<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Tree {
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n.max(1)];
    for i in 1..n {
        children[rng.random_range(0..i)].push(i);
    }
    let mut order = vec![0usize];
    let mut head = 0;
    while head < order.len() {
        let v = order[head];
        order.extend_from_slice(&children[v]);
        head += 1;
    }
    let counts: Vec<usize> = order.iter().map(|&v| children[v].len()).collect();
    tree_from_counts(&counts).expect("breadth-first counts are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn limit() -> EnumerationLimit {
        EnumerationLimit::default()
    }

    #[test]
    fn counting_examples() {
        assert_eq!(count_proper_colourings(&Tree::path(2), 3, limit()).unwrap(), 12);
        assert_eq!(count_proper_colourings(&Tree::complete(2, 0), 5, limit()).unwrap(), 5);
        let t = Tree::complete(2, 2);
        assert_eq!(t.len(), 7);
        assert_eq!(count_proper_colourings(&t, 3, limit()).unwrap(), 192);
    }

    #[test]
    fn enumeration_is_proper_and_distinct() {
        let t = Tree::from_child_counts(&[2, 1, 2, 0, 0, 0], 3).unwrap();
        let mut seen = alloc::collections::BTreeSet::new();
        for_each_colouring(&t, 3, limit(), |c| {
            for v in 1..t.len() {
                assert_ne!(c[v], c[t.parent(v).unwrap()]);
            }
            assert!(seen.insert(c.to_vec()));
        })
        .unwrap();
        assert_eq!(seen.len(), 3 * 32);
    }

    #[test]
    fn shape_counts_are_catalan() {
        let counts: Vec<usize> = (1..=7).map(|n| all_shapes(n).len()).collect();
        assert_eq!(counts, vec![1, 1, 2, 5, 14, 42, 132]);
        for t in all_shapes(5) {
            assert_eq!(t.len(), 5);
            assert!(t.leaf_count() >= 1);
        }
    }

    #[test]
    fn random_shapes_have_requested_size() {
        let mut rng = crate::rng::derive_seed(3, 0);
        for n in 1..12 {
            let t = random_shape(n, &mut rng);
            assert_eq!(t.len(), n);
            assert_eq!(count_proper_colourings(&t, 3, limit()).unwrap() as u128, tree_colouring_count(n, 3));
        }
    }

    #[test]
    fn limit_is_enforced() {
        let t = Tree::complete(3, 3);
        let tight = EnumerationLimit {
            max_total_colourings: 1000,
        };
        assert!(matches!(
            count_proper_colourings(&t, 3, tight),
            Err(OracleError::LimitExceeded { .. })
        ));
    }

    #[test]
    fn root_marginal_examples() {
        let b = Boundary::new(3, vec![0]).unwrap();
        let m = exact_root_marginal(&Tree::path(1), 3, &b, limit()).unwrap();
        assert_eq!(m.probs(), &[0.0, 0.5, 0.5]);
        let b = Boundary::new(3, vec![0, 1]).unwrap();
        let m = exact_root_marginal(&Tree::star(2), 3, &b, limit()).unwrap();
        assert_eq!(m.probs(), &[0.0, 0.0, 1.0]);
        let b = Boundary::new(3, vec![0, 1, 2]).unwrap();
        assert_eq!(
            exact_root_marginal(&Tree::star(3), 3, &b, limit()),
            Err(OracleError::InconsistentBoundary)
        );
    }

    #[test]
    fn rational_marginal_sums_to_one() {
        let t = Tree::from_child_counts(&[2, 2, 1, 0, 0, 0], 2).unwrap();
        let table = LeafPatternTable::build(&t, 4, limit()).unwrap();
        for (pattern, _) in table.iter() {
            let m = table.root_marginal_rational(pattern).unwrap();
            let s = m.into_iter().fold(BigRational::zero(), |a, b| a + b);
            assert!(s.is_one());
        }
    }

    #[test]
    fn leaf_tv_examples() {
        let single = Tree::complete(2, 0);
        assert_eq!(exact_leaf_tv(&single, 3, 0, 1, limit()).unwrap(), 1.0);
        let star = Tree::star(2);
        assert_eq!(exact_leaf_tv(&star, 3, 1, 1, limit()).unwrap(), 0.0);
        // Root 0 puts leaves on {1,2}², root 1 on {0,2}²; they share only (2,2).
        let tv = exact_leaf_tv_rational(&star, 3, 0, 1, limit()).unwrap();
        assert_eq!(tv, BigRational::new(BigInt::from(3), BigInt::from(4)));
    }

    #[test]
    fn magnetization_moments_on_an_edge() {
        let m = exact_magnetization_moments(&Tree::path(1), 2, 0, limit()).unwrap();
        let half = BigRational::new(BigInt::from(1), BigInt::from(2));
        let quarter = BigRational::new(BigInt::from(1), BigInt::from(4));
        assert_eq!(m.mean_abs_y, half);
        assert_eq!(m.mean_y_sq, quarter);
        assert_eq!(m.cond_mean_y, half);
    }

    #[test]
    fn determined_root_gives_full_conditional_mean() {
        let m = exact_magnetization_moments(&Tree::complete(3, 0), 3, 1, limit()).unwrap();
        assert_eq!(m.cond_mean_y, BigRational::new(BigInt::from(2), BigInt::from(3)));
    }
}

//! Truncated Galton-Watson trees and their structural predicates.
//!
//! A [`Tree`] is a flat arena in breadth-first order. The children of a node
//! occupy a contiguous id range and every depth level is a contiguous range,
//! so both upward passes (reverse id order) and downward passes (id order) are
//! plain loops over slices.

pub mod hybrid;
pub mod laws;

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::Rng;
use thiserror::Error;

use crate::distributions::OffspringDistribution;
use crate::math::{at_least, at_most, ceil, pow};

/// Default cap on the number of nodes in a sampled tree.
pub const DEFAULT_NODE_CAP: usize = 100_000_000;

const NO_PARENT: u32 = u32::MAX;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("tree exceeds the node cap of {cap}")]
    ResourceLimit { cap: usize },
    #[error("invalid tree: {0}")]
    Invalid(&'static str),
    #[error("freezability needs a tree of height at least 1")]
    HeightZero,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tree {
    parent: Vec<u32>,
    depth: Vec<u32>,
    first_child: Vec<u32>,
    child_count: Vec<u32>,
    /// `level_start[l]..level_start[l + 1]` are the ids at depth `l`.
    level_start: Vec<usize>,
    height: u32,
}

impl Tree {
    /// Builds a tree of nominal height `height` from breadth-first child
    /// counts. `counts[v]` is the number of children of node `v`; the length of
    /// `counts` must equal the resulting node count.
    pub fn from_child_counts(counts: &[usize], height: u32) -> Result<Self, TreeError> {
        if counts.is_empty() {
            return Err(TreeError::Invalid("a tree needs a root"));
        }
        let n = counts.len();
        if n > u32::MAX as usize - 1 {
            return Err(TreeError::Invalid("too many nodes"));
        }
        let mut parent = vec![NO_PARENT; n];
        let mut depth = vec![0u32; n];
        let mut first_child = vec![0u32; n];
        let mut child_count = vec![0u32; n];
        let mut level_start = vec![0usize, 1];
        let mut next = 1usize;
        for v in 0..n {
            if v > 0 && v == *level_start.last().unwrap() {
                level_start.push(next);
                if next == v {
                    return Err(TreeError::Invalid("child counts do not cover every node"));
                }
            }
            let c = counts[v];
            if c > 0 && depth[v] >= height {
                return Err(TreeError::Invalid("nodes at the truncation depth have children"));
            }
            if next + c > n {
                return Err(TreeError::Invalid("child counts exceed the node count"));
            }
            first_child[v] = next as u32;
            child_count[v] = c as u32;
            for u in next..next + c {
                parent[u] = v as u32;
                depth[u] = depth[v] + 1;
            }
            next += c;
        }
        if next != n {
            return Err(TreeError::Invalid("child counts do not cover every node"));
        }
        if *level_start.last().unwrap() != n {
            level_start.push(n);
        }
        while level_start.len() < height as usize + 2 {
            level_start.push(n);
        }
        Ok(Self {
            parent,
            depth,
            first_child,
            child_count,
            level_start,
            height,
        })
    }

    /// The complete `d`-ary tree of height `h`.
    pub fn complete(d: usize, h: u32) -> Self {
        let mut counts = Vec::new();
        let mut width = 1usize;
        for _ in 0..h {
            counts.extend(core::iter::repeat_n(d, width));
            width *= d;
        }
        counts.extend(core::iter::repeat_n(0, width));
        Self::from_child_counts(&counts, h).expect("complete tree is well formed")
    }

    /// A root with `d` leaf children.
    pub fn star(d: usize) -> Self {
        Self::complete(d, 1)
    }

    /// A path with `h + 1` nodes.
    pub fn path(h: u32) -> Self {
        Self::complete(1, h)
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        let p = self.parent[v];
        (p != NO_PARENT).then_some(p as usize)
    }

    pub fn depth(&self, v: usize) -> u32 {
        self.depth[v]
    }

    pub fn child_count(&self, v: usize) -> usize {
        self.child_count[v] as usize
    }

    pub fn children(&self, v: usize) -> Range<usize> {
        let start = self.first_child[v] as usize;
        start..start + self.child_count[v] as usize
    }

    /// Node ids at depth `l`.
    pub fn level(&self, l: u32) -> Range<usize> {
        let l = l as usize;
        if l + 1 >= self.level_start.len() {
            let n = self.len();
            return n..n;
        }
        self.level_start[l]..self.level_start[l + 1]
    }

    /// The depth-`h` nodes, `L_h(T)`.
    pub fn leaves(&self) -> Range<usize> {
        self.level(self.height)
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves().len()
    }

    /// True when no node reaches depth `h`.
    pub fn is_extinct(&self) -> bool {
        self.leaves().is_empty()
    }

    /// Child counts in breadth-first order.
    pub fn child_counts(&self) -> Vec<usize> {
        self.child_count.iter().map(|&c| c as usize).collect()
    }

    /// The subtree rooted at `v`, truncated at the same absolute depth, as a
    /// tree of height `h - depth(v)`. Node ids are renumbered breadth-first.
    pub fn subtree(&self, v: usize) -> Tree {
        let mut counts = Vec::new();
        let mut frontier = vec![v];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for &u in &frontier {
                counts.push(self.child_count(u));
                next.extend(self.children(u));
            }
            frontier = next;
        }
        Tree::from_child_counts(&counts, self.height - self.depth[v])
            .expect("a subtree of a valid tree is valid")
    }

    /// Maps each node of [`Tree::subtree`]`(v)` back to its id in `self`.
    pub fn subtree_ids(&self, v: usize) -> Vec<usize> {
        let mut ids = Vec::new();
        let mut frontier = vec![v];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for &u in &frontier {
                ids.push(u);
                next.extend(self.children(u));
            }
            frontier = next;
        }
        ids
    }

    /// The path from the root to `v`, root first.
    pub fn path_to(&self, v: usize) -> Vec<usize> {
        let mut path = vec![v];
        let mut u = v;
        while let Some(p) = self.parent(u) {
            path.push(p);
            u = p;
        }
        path.reverse();
        path
    }

    /// The first depth-`h` node in breadth-first order, which ends the
    /// leftmost surviving root-leaf path.
    pub fn leftmost_leaf(&self) -> Option<usize> {
        let leaves = self.leaves();
        (!leaves.is_empty()).then_some(leaves.start)
    }
}

/// Samples a Galton-Watson tree truncated at height `h`, level by level.
pub fn sample_tree<R: Rng + ?Sized>(
    dist: &OffspringDistribution,
    h: u32,
    rng: &mut R,
    node_cap: usize,
) -> Result<Tree, TreeError> {
    let mut counts = Vec::new();
    let mut width = 1usize;
    let mut total = 1usize;
    for _ in 0..h {
        let mut next_width = 0usize;
        for _ in 0..width {
            let c = dist.sample(rng);
            counts.push(c);
            next_width += c;
        }
        total += next_width;
        if total > node_cap {
            return Err(TreeError::ResourceLimit { cap: node_cap });
        }
        width = next_width;
    }
    counts.extend(core::iter::repeat_n(0, width));
    Tree::from_child_counts(&counts, h)
}

/// One boolean per node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeFlags(Vec<bool>);

impl NodeFlags {
    pub fn new(flags: Vec<bool>) -> Self {
        Self(flags)
    }

    pub fn get(&self, v: usize) -> bool {
        self.0[v]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Largest number of non-mixing children a mixing node may have:
/// `floor(Δ₊^δ)`.
pub fn mixing_allowance(delta_plus: usize, delta: f64) -> usize {
    at_most(pow(delta_plus as f64, delta)) as usize
}

/// Smallest number of freezable children a freezable node needs:
/// `ceil(Δ₋ - Δ₋^δ)`.
pub fn freezable_quota(delta_minus: usize, delta: f64) -> usize {
    at_least(delta_minus as f64 - pow(delta_minus as f64, delta)) as usize
}

/// Mixing flags. A node is mixing iff it has at most `Δ₊` children of which
/// at most `floor(Δ₊^δ)` are non-mixing; nodes without children are mixing.
pub fn classify_mixing(tree: &Tree, delta_plus: usize, delta: f64) -> NodeFlags {
    let allowance = mixing_allowance(delta_plus, delta);
    let mut mixing = vec![true; tree.len()];
    for v in (0..tree.len()).rev() {
        let children = tree.children(v);
        if children.len() > delta_plus {
            mixing[v] = false;
            continue;
        }
        let non_mixing = children.filter(|&u| !mixing[u]).count();
        mixing[v] = non_mixing <= allowance;
    }
    NodeFlags(mixing)
}

/// Freezable flags. A node at depth `h-1` is freezable iff it has at least
/// `Δ₋` children; a node higher up additionally needs at least
/// `ceil(Δ₋ - Δ₋^δ)` freezable children. Depth-`h` nodes are not freezable.
pub fn classify_freezable(tree: &Tree, delta_minus: usize, delta: f64) -> Result<NodeFlags, TreeError> {
    if tree.height() == 0 {
        return Err(TreeError::HeightZero);
    }
    let quota = freezable_quota(delta_minus, delta);
    let bottom = tree.height() - 1;
    let mut freezable = vec![false; tree.len()];
    for v in (0..tree.level(tree.height()).start).rev() {
        let children = tree.children(v);
        if children.len() < delta_minus {
            continue;
        }
        freezable[v] = tree.depth(v) == bottom || children.filter(|&u| freezable[u]).count() >= quota;
    }
    Ok(NodeFlags(freezable))
}

/// `ceil((1-ζ)h)`: how many mixing vertices every root-leaf path needs.
pub fn a_set_requirement(h: u32, zeta: f64) -> u32 {
    ceil((1.0 - zeta) * h as f64 - 1e-12) as u32
}

/// Membership in `𝒜_{h,ζ}`: every path from the root to a depth-`h` node has
/// at least `ceil((1-ζ)h)` mixing vertices, counting both endpoints. Trees
/// with no depth-`h` node are members.
pub fn in_a(tree: &Tree, mixing: &NodeFlags, zeta: f64) -> bool {
    let need = a_set_requirement(tree.height(), zeta);
    let mut count = vec![0u32; tree.len()];
    for v in 0..tree.len() {
        let above = tree.parent(v).map_or(0, |p| count[p]);
        count[v] = above + mixing.get(v) as u32;
    }
    tree.leaves().all(|v| count[v] >= need)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_seed;

    #[test]
    fn complete_and_trivial_trees() {
        let t = Tree::complete(2, 3);
        assert_eq!(t.len(), 15);
        assert_eq!(t.leaf_count(), 8);
        let single = Tree::complete(5, 0);
        assert_eq!(single.len(), 1);
        assert_eq!(single.leaves(), 0..1);
    }

    #[test]
    fn sample_deterministic_is_complete() {
        let dist = OffspringDistribution::deterministic(2);
        let t = sample_tree(&dist, 3, &mut derive_seed(1, 0), DEFAULT_NODE_CAP).unwrap();
        assert_eq!(t, Tree::complete(2, 3));
        let t = sample_tree(&dist, 0, &mut derive_seed(1, 0), DEFAULT_NODE_CAP).unwrap();
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn node_cap_is_enforced() {
        let dist = OffspringDistribution::deterministic(10);
        let err = sample_tree(&dist, 5, &mut derive_seed(1, 0), 1000).unwrap_err();
        assert_eq!(err, TreeError::ResourceLimit { cap: 1000 });
    }

    #[test]
    fn structural_invariants() {
        let dist = OffspringDistribution::explicit(&[0.2, 0.3, 0.3, 0.2]).unwrap();
        for i in 0..50 {
            let t = sample_tree(&dist, 5, &mut derive_seed(9, i), DEFAULT_NODE_CAP).unwrap();
            assert!(t.parent(0).is_none());
            let mut children_total = 0;
            for v in 0..t.len() {
                children_total += t.child_count(v);
                for u in t.children(v) {
                    assert_eq!(t.parent(u), Some(v));
                    assert_eq!(t.depth(u), t.depth(v) + 1);
                }
                assert!(t.depth(v) <= t.height());
                if t.depth(v) == t.height() {
                    assert_eq!(t.child_count(v), 0);
                }
            }
            assert_eq!(t.len(), 1 + children_total);
        }
    }

    #[test]
    fn from_child_counts_rejects_malformed_input() {
        assert!(Tree::from_child_counts(&[], 0).is_err());
        assert!(Tree::from_child_counts(&[2, 0], 1).is_err());
        assert!(Tree::from_child_counts(&[1, 1, 0], 1).is_err());
        assert!(Tree::from_child_counts(&[1, 0, 0], 1).is_err());
    }

    #[test]
    fn mixing_examples() {
        let single = Tree::complete(3, 0);
        assert!(classify_mixing(&single, 1, 0.1).get(0));

        let star = Tree::star(6);
        assert!(!classify_mixing(&star, 5, 0.1).get(0));
        assert!(classify_mixing(&star, 6, 0.1).get(0));

        // Root with Δ₊ = 4 children, each carrying 5 grandchildren.
        let mut counts = vec![4];
        counts.extend([5; 4]);
        counts.extend([0; 20]);
        let t = Tree::from_child_counts(&counts, 2).unwrap();
        let flags = classify_mixing(&t, 4, 0.1);
        assert!(t.children(0).all(|u| !flags.get(u)));
        assert!(!flags.get(0));
    }

    #[test]
    fn freezable_examples() {
        assert!(classify_freezable(&Tree::star(5), 5, 0.1).unwrap().get(0));
        assert!(!classify_freezable(&Tree::star(4), 5, 0.1).unwrap().get(0));
        let t = Tree::complete(4, 3);
        let flags = classify_freezable(&t, 4, 0.1).unwrap();
        assert!((0..t.level(3).start).all(|v| flags.get(v)));
        assert!(classify_freezable(&Tree::complete(4, 0), 4, 0.1).is_err());
    }

    #[test]
    fn a_set_examples() {
        let t = Tree::complete(2, 5);
        let flags = classify_mixing(&t, 2, 0.1);
        assert!(in_a(&t, &flags, 0.25));

        // A spine of length h whose internal vertices each carry Δ₊ + 1 extra
        // childless children, so every internal spine vertex is non-mixing.
        let h = 4u32;
        let delta_plus = 2usize;
        let extra = delta_plus + 1;
        let mut counts = vec![1 + extra];
        for _ in 1..h {
            counts.push(1 + extra);
            counts.extend(core::iter::repeat_n(0, extra));
        }
        counts.push(0);
        counts.extend(core::iter::repeat_n(0, extra));
        let t = Tree::from_child_counts(&counts, h).unwrap();
        let flags = classify_mixing(&t, delta_plus, 0.1);
        assert!((0..h as usize).all(|l| !flags.get(t.level(l as u32).start)));
        assert!(!in_a(&t, &flags, 0.25));
    }

    #[test]
    fn extinct_tree_is_in_a() {
        let t = Tree::from_child_counts(&[1, 0], 3).unwrap();
        assert!(t.is_extinct());
        let flags = classify_mixing(&t, 0, 0.1);
        assert!(in_a(&t, &flags, 0.25));
    }

    #[test]
    fn subtree_extraction() {
        let dist = OffspringDistribution::explicit(&[0.1, 0.4, 0.5]).unwrap();
        let t = sample_tree(&dist, 4, &mut derive_seed(3, 3), DEFAULT_NODE_CAP).unwrap();
        let flags = classify_mixing(&t, 1, 0.1);
        for v in t.level(1) {
            let sub = t.subtree(v);
            let ids = t.subtree_ids(v);
            let sub_flags = classify_mixing(&sub, 1, 0.1);
            for (i, &orig) in ids.iter().enumerate() {
                assert_eq!(sub_flags.get(i), flags.get(orig));
            }
        }
    }

    #[test]
    fn paths() {
        let t = Tree::complete(3, 2);
        let leaf = t.leftmost_leaf().unwrap();
        assert_eq!(t.path_to(leaf), vec![0, 1, 4]);
    }
}

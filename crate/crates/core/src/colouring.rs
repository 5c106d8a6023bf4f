//! Broadcast colourings, exact root marginals and frozen colour sets.
//!
//! Colours are `0..k`. Sets of colours are `u64` bitsets, which limits `k` to
//! 64; every colour count of interest here is far below that.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use thiserror::Error;

use crate::math::{at_least, at_most, exp, log1p, pow};
use crate::trees::{NodeFlags, Tree};

/// Largest supported number of colours.
pub const MAX_COLOURS: u32 = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ColouringError {
    #[error("k = {0} is out of range; need 2 <= k <= 64")]
    InvalidK(u32),
    #[error("colour {colour} is not below k = {k}")]
    InvalidColour { colour: u32, k: u32 },
    #[error("the two root colours must differ")]
    SameRootColour,
    #[error("boundary has {got} colours but the tree has {expected} depth-h nodes")]
    BoundarySize { expected: usize, got: usize },
    #[error("no proper colouring extends the boundary")]
    InconsistentBoundary,
}

fn check_k(k: u32) -> Result<(), ColouringError> {
    if (2..=MAX_COLOURS).contains(&k) {
        Ok(())
    } else {
        Err(ColouringError::InvalidK(k))
    }
}

fn check_colour(colour: u32, k: u32) -> Result<(), ColouringError> {
    if colour < k {
        Ok(())
    } else {
        Err(ColouringError::InvalidColour { colour, k })
    }
}

fn full_set(k: u32) -> u64 {
    if k == 64 {
        u64::MAX
    } else {
        (1u64 << k) - 1
    }
}

/// A colour for every node of a tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Colouring {
    k: u32,
    colours: Vec<u8>,
}

impl Colouring {
    pub fn new(k: u32, colours: Vec<u8>) -> Result<Self, ColouringError> {
        check_k(k)?;
        for &c in &colours {
            check_colour(c as u32, k)?;
        }
        Ok(Self { k, colours })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn colour(&self, v: usize) -> u32 {
        self.colours[v] as u32
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.colours
    }

    /// True when no node shares its parent's colour.
    pub fn is_proper(&self, tree: &Tree) -> bool {
        (1..tree.len()).all(|v| {
            let p = tree.parent(v).expect("non-root nodes have parents");
            self.colours[v] != self.colours[p]
        })
    }

    /// The colouring restricted to the depth-`h` nodes.
    pub fn boundary(&self, tree: &Tree) -> Boundary {
        Boundary {
            k: self.k,
            colours: self.colours[tree.leaves()].to_vec(),
        }
    }
}

/// Colours of the depth-`h` nodes, in the tree's leaf order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Boundary {
    k: u32,
    colours: Vec<u8>,
}

impl Boundary {
    pub fn new(k: u32, colours: Vec<u8>) -> Result<Self, ColouringError> {
        check_k(k)?;
        for &c in &colours {
            check_colour(c as u32, k)?;
        }
        Ok(Self { k, colours })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn len(&self) -> usize {
        self.colours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colours.is_empty()
    }

    /// Colour of the `i`-th depth-`h` node.
    pub fn colour(&self, i: usize) -> u32 {
        self.colours[i] as u32
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.colours
    }

    /// A copy with the `i`-th colour replaced.
    pub fn with_colour(&self, i: usize, colour: u32) -> Result<Self, ColouringError> {
        check_colour(colour, self.k)?;
        let mut colours = self.colours.clone();
        colours[i] = colour as u8;
        Ok(Self { k: self.k, colours })
    }

    fn check_against(&self, tree: &Tree) -> Result<(), ColouringError> {
        if self.colours.len() != tree.leaf_count() {
            return Err(ColouringError::BoundarySize {
                expected: tree.leaf_count(),
                got: self.colours.len(),
            });
        }
        Ok(())
    }
}

/// A probability vector over the `k` colours.
#[derive(Clone, Debug, PartialEq)]
pub struct Marginal {
    probs: Vec<f64>,
}

impl Marginal {
    pub fn new(probs: Vec<f64>) -> Self {
        Self { probs }
    }

    pub fn uniform(k: u32) -> Self {
        Self {
            probs: vec![1.0 / k as f64; k as usize],
        }
    }

    pub fn point_mass(k: u32, colour: u32) -> Self {
        let mut probs = vec![0.0; k as usize];
        probs[colour as usize] = 1.0;
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, c: u32) -> f64 {
        self.probs[c as usize]
    }

    pub fn max(&self) -> f64 {
        self.probs.iter().copied().fold(0.0, f64::max)
    }

    /// Colours with positive probability.
    pub fn support(&self) -> u64 {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .fold(0u64, |s, (c, _)| s | (1 << c))
    }

    /// `(1/2)Σ|p - q|`.
    pub fn total_variation(&self, other: &Marginal) -> f64 {
        0.5 * self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

/// Draws a colour uniformly from `0..k` without `excluded`.
#[inline]
fn draw_other<R: Rng + ?Sized>(k: u32, excluded: u8, rng: &mut R) -> u8 {
    let x = rng.random_range(0..k - 1) as u8;
    if x >= excluded {
        x + 1
    } else {
        x
    }
}

/// Broadcasts from the root: the root takes `root_colour` and every child is
/// uniform over the `k - 1` colours different from its parent's.
pub fn broadcast<R: Rng + ?Sized>(
    tree: &Tree,
    k: u32,
    root_colour: u32,
    rng: &mut R,
) -> Result<Colouring, ColouringError> {
    check_k(k)?;
    check_colour(root_colour, k)?;
    let mut colours = vec![0u8; tree.len()];
    colours[0] = root_colour as u8;
    for v in 1..tree.len() {
        let p = tree.parent(v).expect("non-root nodes have parents");
        colours[v] = draw_other(k, colours[p], rng);
    }
    Ok(Colouring { k, colours })
}

/// Two broadcasts with root colours `c` and `q`, coupled so that below any
/// pair of agreeing parents the children agree, and below disagreeing parents
/// `(a, b)` the first child is uniform off `a` and the second copies it unless
/// it equals `b`, in which case it takes `a`.
pub fn broadcast_coupled<R: Rng + ?Sized>(
    tree: &Tree,
    k: u32,
    c: u32,
    q: u32,
    rng: &mut R,
) -> Result<(Colouring, Colouring), ColouringError> {
    check_k(k)?;
    check_colour(c, k)?;
    check_colour(q, k)?;
    if c == q {
        return Err(ColouringError::SameRootColour);
    }
    let mut x = vec![0u8; tree.len()];
    let mut z = vec![0u8; tree.len()];
    x[0] = c as u8;
    z[0] = q as u8;
    for v in 1..tree.len() {
        let p = tree.parent(v).expect("non-root nodes have parents");
        let (a, b) = (x[p], z[p]);
        let xv = draw_other(k, a, rng);
        x[v] = xv;
        z[v] = if a == b || xv != b { xv } else { a };
    }
    Ok((Colouring { k, colours: x }, Colouring { k, colours: z }))
}

/// Log-space message from a child: `log(1 - m_u(c))` accumulated into `acc`.
fn add_child_message(acc: &mut [f64], child: &[f64]) {
    for (a, &m) in acc.iter_mut().zip(child) {
        *a += log1p(-m);
    }
}

/// Normalises a log-weight vector in place into probabilities.
fn normalise_logs(logs: &mut [f64]) -> Result<(), ColouringError> {
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Err(ColouringError::InconsistentBoundary);
    }
    let mut total = 0.0;
    for l in logs.iter_mut() {
        *l = exp(*l - top);
        total += *l;
    }
    for l in logs.iter_mut() {
        *l /= total;
    }
    Ok(())
}

/// Marginal at `v` of the uniform proper colouring of the subtree below `v`,
/// conditioned on the boundary beneath `v`, given the children's marginals.
fn combine<'a>(
    tree: &Tree,
    k: usize,
    v: usize,
    leaf_start: usize,
    boundary: &Boundary,
    child_marginal: impl Fn(usize) -> &'a [f64],
    out: &mut [f64],
) -> Result<(), ColouringError> {
    out.iter_mut().for_each(|x| *x = 0.0);
    for u in tree.children(v) {
        if u >= leaf_start {
            out[boundary.colours[u - leaf_start] as usize] = f64::NEG_INFINITY;
        } else {
            add_child_message(out, &child_marginal(u)[..k]);
        }
    }
    normalise_logs(out)
}

/// Exact marginal of the root colour under the uniform proper colouring
/// conditioned on the boundary, by one upward pass:
/// `m_v(c) ∝ Π_{children u} (1 - m_u(c))`, with depth-`h` nodes fixed to their
/// boundary colour. Products are accumulated in log space and renormalised at
/// every node.
pub fn root_marginal(tree: &Tree, k: u32, boundary: &Boundary) -> Result<Marginal, ColouringError> {
    check_k(k)?;
    boundary.check_against(tree)?;
    if tree.height() == 0 {
        return Ok(Marginal::point_mass(k, boundary.colour(0)));
    }
    let ku = k as usize;
    let leaf_start = tree.leaves().start;
    // Level-by-level buffers: `below` holds marginals of the level underneath.
    let mut below: Vec<f64> = Vec::new();
    let mut below_start = leaf_start;
    for l in (0..tree.height()).rev() {
        let level = tree.level(l);
        let mut current = vec![0.0; level.len() * ku];
        for (v, out) in level.clone().zip(current.chunks_mut(ku)) {
            let below = &below;
            combine(
                tree,
                ku,
                v,
                leaf_start,
                boundary,
                |u| &below[(u - below_start) * ku..],
                out,
            )?;
        }
        below = current;
        below_start = level.start;
    }
    Ok(Marginal { probs: below })
}

/// For every node `v`, the marginal at `v` of the uniform proper colouring of
/// the subtree below `v` conditioned on the boundary beneath `v`. Depth-`h`
/// nodes carry point masses; other nodes without children are uniform.
pub fn subtree_marginals(tree: &Tree, k: u32, boundary: &Boundary) -> Result<Vec<Marginal>, ColouringError> {
    check_k(k)?;
    boundary.check_against(tree)?;
    let ku = k as usize;
    let leaf_start = tree.leaves().start;
    let mut all = vec![0.0; tree.len() * ku];
    for (i, v) in tree.leaves().enumerate() {
        all[v * ku + boundary.colour(i) as usize] = 1.0;
    }
    for v in (0..leaf_start).rev() {
        // Children have larger ids than `v`, so they live in `tail`.
        let (head, tail) = all.split_at_mut((v + 1) * ku);
        let tail: &[f64] = tail;
        combine(
            tree,
            ku,
            v,
            leaf_start,
            boundary,
            |u| &tail[(u - v - 1) * ku..],
            &mut head[v * ku..],
        )?;
    }
    Ok(all.chunks(ku).map(|c| Marginal { probs: c.to_vec() }).collect())
}

/// Per-node sets of colours with positive conditional probability.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AllowedSets {
    k: u32,
    sets: Vec<u64>,
}

impl AllowedSets {
    pub fn set(&self, v: usize) -> u64 {
        self.sets[v]
    }

    pub fn contains(&self, v: usize, colour: u32) -> bool {
        self.sets[v] >> colour & 1 == 1
    }

    pub fn size(&self, v: usize) -> u32 {
        self.sets[v].count_ones()
    }

    /// True when `v` is forced to a single colour.
    pub fn is_frozen(&self, v: usize) -> bool {
        self.sets[v].count_ones() == 1
    }

    /// True when the boundary forces the root colour.
    pub fn is_freezing(&self) -> bool {
        self.is_frozen(0)
    }

    pub fn k(&self) -> u32 {
        self.k
    }
}

/// `S(leaf) = {boundary colour}` and `S(v) = [k] \ {c : some child has S = {c}}`.
pub fn allowed_sets(tree: &Tree, k: u32, boundary: &Boundary) -> Result<AllowedSets, ColouringError> {
    check_k(k)?;
    boundary.check_against(tree)?;
    let full = full_set(k);
    let leaf_start = tree.leaves().start;
    let mut sets = vec![full; tree.len()];
    for (i, v) in tree.leaves().enumerate() {
        sets[v] = 1 << boundary.colour(i);
    }
    for v in (0..leaf_start).rev() {
        let mut forbidden = 0u64;
        for u in tree.children(v) {
            let s = sets[u];
            if s.count_ones() == 1 {
                forbidden |= s;
            }
        }
        let s = full & !forbidden;
        if s == 0 {
            return Err(ColouringError::InconsistentBoundary);
        }
        sets[v] = s;
    }
    Ok(AllowedSets { k, sets })
}

/// `max_c μ(root = c | boundary)`.
pub fn bias_score(tree: &Tree, k: u32, boundary: &Boundary) -> Result<f64, ColouringError> {
    Ok(root_marginal(tree, k, boundary)?.max())
}

/// Non-biasing classification of every mixing-rooted subtree of height at
/// least one: `Some(true)` non-biased, `Some(false)` biased, `None` where the
/// notion does not apply (non-mixing roots and depth-`h` nodes).
///
/// A height-1 subtree is non-biased when its own leaves miss at least
/// `Δ₊^γ` of the `k` colours. A taller subtree is non-biased when at most
/// `floor(Δ₊^δ)` of its mixing-rooted child subtrees are biased.
pub fn classify_nonbiasing(
    tree: &Tree,
    boundary: &Boundary,
    delta_plus: usize,
    delta: f64,
    gamma: f64,
    mixing: &NodeFlags,
) -> Result<Vec<Option<bool>>, ColouringError> {
    boundary.check_against(tree)?;
    let k = boundary.k();
    let need_missing = at_least(pow(delta_plus as f64, gamma)) as u32;
    let allowance = at_most(pow(delta_plus as f64, delta)) as usize;
    let h = tree.height();
    let leaf_start = tree.leaves().start;
    let mut out = vec![None; tree.len()];
    for v in (0..leaf_start).rev() {
        if !mixing.get(v) {
            continue;
        }
        if tree.depth(v) + 1 == h {
            let used = tree
                .children(v)
                .fold(0u64, |s, u| s | 1 << boundary.colour(u - leaf_start));
            out[v] = Some(k - used.count_ones() >= need_missing);
        } else {
            let biased = tree
                .children(v)
                .filter(|&u| mixing.get(u) && out[u] == Some(false))
                .count();
            out[v] = Some(biased <= allowance);
        }
    }
    Ok(out)
}

/// Membership of the boundary in `𝒰_w`: no mixing-rooted subtree hanging from
/// a vertex on the root-to-`w` path within distance `fraction·h` of the root
/// is biased. `fraction` is `3/4` in the standard definition.
pub fn in_u_w(tree: &Tree, nonbiased: &[Option<bool>], mixing: &NodeFlags, w: usize, fraction: f64) -> bool {
    let limit = at_most(fraction * tree.height() as f64) as u32;
    tree.path_to(w)
        .into_iter()
        .filter(|&v| tree.depth(v) <= limit && mixing.get(v))
        .all(|v| nonbiased[v] != Some(false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_seed;
    use crate::trees::classify_mixing;

    fn assert_marginal(m: &Marginal, expected: &[f64]) {
        for (a, b) in m.probs().iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{:?} vs {:?}", m.probs(), expected);
        }
    }

    #[test]
    fn broadcast_is_proper() {
        let t = Tree::complete(3, 4);
        for i in 0..20 {
            let col = broadcast(&t, 3, 0, &mut derive_seed(1, i)).unwrap();
            assert!(col.is_proper(&t));
            assert_eq!(col.colour(0), 0);
        }
        assert!(broadcast(&t, 1, 0, &mut derive_seed(1, 0)).is_err());
        assert!(broadcast(&t, 3, 3, &mut derive_seed(1, 0)).is_err());
    }

    #[test]
    fn broadcast_child_is_uniform_off_parent() {
        let t = Tree::path(1);
        let n = 100_000;
        let mut ones = 0usize;
        for i in 0..n {
            let col = broadcast(&t, 3, 0, &mut derive_seed(2, i)).unwrap();
            assert_ne!(col.colour(1), 0);
            ones += (col.colour(1) == 1) as usize;
        }
        let f = ones as f64 / n as f64;
        assert!((f - 0.5).abs() < 3.0 * libm::sqrt(0.25 / n as f64));
    }

    #[test]
    fn coupling_agrees_below_agreeing_parents() {
        let t = Tree::complete(3, 4);
        for i in 0..50 {
            let (x, z) = broadcast_coupled(&t, 4, 0, 1, &mut derive_seed(3, i)).unwrap();
            assert!(x.is_proper(&t) && z.is_proper(&t));
            for v in 1..t.len() {
                let p = t.parent(v).unwrap();
                if x.colour(p) == z.colour(p) {
                    assert_eq!(x.colour(v), z.colour(v));
                }
            }
        }
        assert_eq!(
            broadcast_coupled(&t, 4, 2, 2, &mut derive_seed(3, 0)),
            Err(ColouringError::SameRootColour)
        );
    }

    #[test]
    fn coupled_children_disagree_at_rate_one_over_k_minus_one() {
        let t = Tree::star(20);
        let k = 5;
        let n = 4000;
        let mut disagree = 0usize;
        for i in 0..n {
            let (x, z) = broadcast_coupled(&t, k, 0, 1, &mut derive_seed(4, i)).unwrap();
            disagree += t.leaves().filter(|&v| x.colour(v) != z.colour(v)).count();
        }
        let trials = (n * 20) as f64;
        let rate = disagree as f64 / trials;
        let p = 1.0 / (k - 1) as f64;
        assert!((rate - p).abs() < 4.0 * libm::sqrt(p * (1.0 - p) / trials), "{rate}");
    }

    #[test]
    fn root_marginal_examples() {
        let t = Tree::path(1);
        let b = Boundary::new(3, vec![0]).unwrap();
        assert_marginal(&root_marginal(&t, 3, &b).unwrap(), &[0.0, 0.5, 0.5]);

        let star = Tree::star(2);
        let b = Boundary::new(3, vec![0, 1]).unwrap();
        assert_marginal(&root_marginal(&star, 3, &b).unwrap(), &[0.0, 0.0, 1.0]);

        let single = Tree::complete(2, 0);
        let b = Boundary::new(3, vec![2]).unwrap();
        assert_marginal(&root_marginal(&single, 3, &b).unwrap(), &[0.0, 0.0, 1.0]);
        assert_eq!(bias_score(&single, 3, &b).unwrap(), 1.0);
    }

    #[test]
    fn inconsistent_boundary_is_an_error() {
        let star = Tree::star(3);
        let b = Boundary::new(3, vec![0, 1, 2]).unwrap();
        assert_eq!(root_marginal(&star, 3, &b), Err(ColouringError::InconsistentBoundary));
        assert_eq!(allowed_sets(&star, 3, &b), Err(ColouringError::InconsistentBoundary));
        let short = Boundary::new(3, vec![0]).unwrap();
        assert!(matches!(
            root_marginal(&star, 3, &short),
            Err(ColouringError::BoundarySize { .. })
        ));
    }

    #[test]
    fn allowed_set_examples() {
        let star = Tree::star(2);
        let s = allowed_sets(&star, 3, &Boundary::new(3, vec![0, 1]).unwrap()).unwrap();
        assert_eq!(s.set(0), 0b100);
        assert!(s.is_freezing());
        let path = Tree::path(1);
        let s = allowed_sets(&path, 3, &Boundary::new(3, vec![0]).unwrap()).unwrap();
        assert_eq!(s.set(0), 0b110);
        assert!(!s.is_freezing());
    }

    #[test]
    fn subtree_marginals_match_root_marginal() {
        let dist = crate::OffspringDistribution::explicit(&[0.1, 0.3, 0.4, 0.2]).unwrap();
        for i in 0..50 {
            let mut rng = derive_seed(4, i);
            let t = crate::trees::sample_tree(&dist, 4, &mut rng, 1 << 20).unwrap();
            if t.is_extinct() {
                continue;
            }
            let col = broadcast(&t, 4, 0, &mut rng).unwrap();
            let b = col.boundary(&t);
            let all = subtree_marginals(&t, 4, &b).unwrap();
            let root = root_marginal(&t, 4, &b).unwrap();
            for (x, y) in all[0].probs().iter().zip(root.probs()) {
                assert!((x - y).abs() < 1e-12);
            }
            let sets = allowed_sets(&t, 4, &b).unwrap();
            for (v, m) in all.iter().enumerate() {
                assert_eq!(m.support(), sets.set(v));
            }
        }
    }

    #[test]
    fn nonbiasing_height_one() {
        let star = Tree::star(5);
        let mixing = classify_mixing(&star, 5, 0.1);
        // k = 8, boundary uses 3 colours, misses 5 >= ceil(5^0.5) = 3.
        let b = Boundary::new(8, vec![0, 1, 2, 0, 1]).unwrap();
        let c = classify_nonbiasing(&star, &b, 5, 0.1, 0.5, &mixing).unwrap();
        assert_eq!(c[0], Some(true));
        // k = 5, boundary uses all colours.
        let b = Boundary::new(5, vec![0, 1, 2, 3, 4]).unwrap();
        let c = classify_nonbiasing(&star, &b, 5, 0.1, 0.5, &mixing).unwrap();
        assert_eq!(c[0], Some(false));
        assert_eq!(c[1], None);
    }
}

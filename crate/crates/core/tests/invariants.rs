use proptest::prelude::*;
use recon_core::colouring::{allowed_sets, broadcast, broadcast_coupled, root_marginal};
use recon_core::oracle::{exact_root_marginal, random_shape, EnumerationLimit};
use recon_core::rng::derive_seed;
use recon_core::thresholds::{binomial_tail_geq, binomial_tail_lt, compute_delta_minus, compute_delta_plus};
use recon_core::trees::sample_tree;
use recon_core::{Boundary, OffspringDistribution, Tree};

fn boundary_for(tree: &Tree, k: u32, raw: &[u8]) -> Boundary {
    let colours = (0..tree.leaf_count()).map(|i| raw[i % raw.len()] % k as u8).collect();
    Boundary::new(k, colours).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn recursion_matches_enumeration(
        n in 1usize..=8,
        k in 3u32..=4,
        seed in any::<u64>(),
        raw in prop::collection::vec(any::<u8>(), 1..8),
    ) {
        let tree = random_shape(n, &mut derive_seed(seed, 0));
        let boundary = boundary_for(&tree, k, &raw);
        let fast = root_marginal(&tree, k, &boundary);
        let slow = exact_root_marginal(&tree, k, &boundary, EnumerationLimit::default());
        prop_assert_eq!(fast.is_ok(), slow.is_ok());
        if let (Ok(fast), Ok(slow)) = (fast, slow) {
            for c in 0..k {
                prop_assert!((fast.get(c) - slow.get(c)).abs() < 1e-12);
            }
            let sets = allowed_sets(&tree, k, &boundary).unwrap();
            prop_assert_eq!(sets.set(tree.root()), slow.support());
        }
    }

    #[test]
    fn marginals_are_probability_vectors(
        d in 1usize..=4,
        h in 1u32..=3,
        k in 3u32..=6,
        seed in any::<u64>(),
    ) {
        let tree = Tree::complete(d, h);
        let colouring = broadcast(&tree, k, 0, &mut derive_seed(seed, 1)).unwrap();
        prop_assert!(colouring.is_proper(&tree));
        let m = root_marginal(&tree, k, &colouring.boundary(&tree)).unwrap();
        prop_assert!((m.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(m.get(0) > 0.0);
    }

    #[test]
    fn coupled_broadcasts_are_proper_and_rooted(
        d in 1usize..=4,
        h in 1u32..=4,
        k in 3u32..=8,
        seed in any::<u64>(),
    ) {
        let tree = Tree::complete(d, h);
        let (x, z) = broadcast_coupled(&tree, k, 0, 1, &mut derive_seed(seed, 2)).unwrap();
        prop_assert!(x.is_proper(&tree) && z.is_proper(&tree));
        prop_assert_eq!((x.colour(0), z.colour(0)), (0, 1));
        for v in 1..tree.len() {
            let p = tree.parent(v).unwrap();
            if x.colour(p) == z.colour(p) {
                prop_assert_eq!(x.colour(v), z.colour(v));
            }
        }
    }

    #[test]
    fn binomial_tails_are_complementary_and_monotone(n in 0u64..300, p in 0.0f64..=1.0, m in 0u64..320) {
        let geq = binomial_tail_geq(n, p, m);
        let lt = binomial_tail_lt(n, p, m);
        prop_assert!((0.0..=1.0).contains(&geq) && (0.0..=1.0).contains(&lt));
        prop_assert!((geq + lt - 1.0).abs() < 1e-9);
        prop_assert!(binomial_tail_geq(n, p, m + 1) <= geq + 1e-15);
    }

    #[test]
    fn distribution_tails_split_the_mass(n in 1usize..200, p in 0.0f64..=1.0, x in 0usize..220) {
        let dist = OffspringDistribution::binomial(n, p).unwrap();
        prop_assert!((dist.upper_tail(x) + dist.lower_tail_strict(x) - 1.0).abs() < 1e-9);
        prop_assert!(dist.size_biased_upper_tail(x) >= (x + 1) as f64 * dist.upper_tail(x + 1) - 1e-12);
    }

    #[test]
    fn threshold_witnesses_have_nonnegative_slack(n in 200usize..3000, d in 15.0f64..60.0) {
        let dist = OffspringDistribution::binomial(n, d / n as f64).unwrap();
        if let Ok(plus) = compute_delta_plus(&dist, 0.1, 4.0, 50) {
            prop_assert!(plus.slack_eq2 >= 0.0);
            prop_assert!(plus.slack_eq3_left >= 0.0);
            prop_assert!(plus.slack_eq3_right >= 0.0);
            prop_assert!(plus.q < 0.75);
        }
        if let Ok(minus) = compute_delta_minus(&dist, 0.1) {
            prop_assert!(minus.slack_eq4 >= 0.0);
            prop_assert!(minus.g < 0.75);
            prop_assert!(minus.delta_minus as f64 <= d.ceil() + 1.0);
        }
    }

    #[test]
    fn sampled_trees_are_consistent(lambda in 0.5f64..3.0, h in 0u32..5, seed in any::<u64>()) {
        let dist = OffspringDistribution::poisson(lambda).unwrap();
        let tree = sample_tree(&dist, h, &mut derive_seed(seed, 3), 1 << 20).unwrap();
        let again = sample_tree(&dist, h, &mut derive_seed(seed, 3), 1 << 20).unwrap();
        prop_assert_eq!(&tree.child_counts(), &again.child_counts());
        prop_assert_eq!(Tree::from_child_counts(&tree.child_counts(), h).unwrap().child_counts(), tree.child_counts());
        for v in 1..tree.len() {
            prop_assert_eq!(tree.depth(v), tree.depth(tree.parent(v).unwrap()) + 1);
        }
        for v in tree.leaves() {
            prop_assert_eq!(tree.depth(v), h);
        }
    }
}

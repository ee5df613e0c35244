mod common;

use proptest::prelude::*;
use qswap::order_search::{score_all_trees, Strategy as Search};
use qswap::{ent, EvalMode, LinkSpec, PathSpec, SwapOrder};

fn small_path() -> impl Strategy<Value = PathSpec> {
    (1usize..=5).prop_flat_map(|n| {
        (
            prop::collection::vec((0u64..=6, 0.0f64..=1.0), n),
            prop::collection::vec(0.0f64..=1.0, n - 1),
        )
            .prop_map(|(links, swaps)| {
                let links = links.into_iter().map(|(c, p)| LinkSpec { capacity: c.max(1), success: p }).collect();
                PathSpec::new(links, swaps).unwrap()
            })
    })
}

fn path_and_order() -> impl Strategy<Value = (PathSpec, SwapOrder)> {
    small_path().prop_flat_map(|path| {
        let nodes: Vec<usize> = (1..path.node_count() - 1).collect();
        (Just(path), Just(nodes).prop_shuffle().prop_map(SwapOrder::new))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn exact_equals_joint_enumeration((path, order) in path_and_order()) {
        let exact = ent(&path, &order, EvalMode::Exact).unwrap().score;
        prop_assert!((exact - common::joint_state_ent(&path, &order)).abs() <= 1e-9);
    }

    #[test]
    fn mirroring_preserves_score((path, order) in path_and_order()) {
        let a = ent(&path, &order, EvalMode::Exact).unwrap().score;
        let b = ent(&path.mirrored(), &order.mirrored(path.node_count()), EvalMode::Exact).unwrap().score;
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn tail_never_overestimates((path, order) in path_and_order()) {
        let exact = ent(&path, &order, EvalMode::Exact).unwrap().score;
        let tail = ent(&path, &order, EvalMode::Tail { epsilon: 1e-3 }).unwrap().score;
        prop_assert!(tail <= exact + 1e-12);
    }

    #[test]
    fn every_strategy_is_bounded_by_brute_force(path in small_path()) {
        let best = Search::BruteForce.run(&path, EvalMode::Exact).unwrap().score;
        for name in ["greedy", "vora", "balanced", "l2r", "r2l"] {
            let s = Search::from_name(name).unwrap().run(&path, EvalMode::Exact).unwrap();
            prop_assert!(s.score <= best + 1e-12 * best.max(1.0), "{name} beat brute force");
            let again = ent(&path, &s.order, EvalMode::Exact).unwrap().score;
            prop_assert!((again - s.score).abs() <= 1e-12 * again.max(1.0));
        }
    }
}

#[test]
fn brute_force_scores_every_tree_against_enumeration() {
    let path = PathSpec::uniform(&[3, 4, 5, 4, 3], 0.6, 0.7).unwrap();
    let scored = score_all_trees(&path, EvalMode::Exact, 100).unwrap();
    let mut orders: Vec<_> = scored.iter().map(|s| s.order.clone()).collect();
    orders.sort();
    orders.dedup();
    assert_eq!(orders.len(), 14);
    for s in &scored {
        assert!((s.score - common::joint_state_ent(&path, &s.order)).abs() <= 1e-9, "{s}");
    }
}

use hsstree_core::tree::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn irregular(rng: &mut ChaCha20Rng, depth: u32, n: usize, t: u32) -> TreeNode {
    if depth == 0 || rng.gen_bool(0.3) {
        return TreeNode::Leaf(rng.gen_range(-1000..1000));
    }
    let test = if rng.gen_bool(0.25) {
        let mut set: Vec<u64> = (0..rng.gen_range(1..4)).map(|_| rng.gen_range(0..1 << t)).collect();
        set.sort_unstable();
        set.dedup();
        NodeTest::MemberOf(set)
    } else {
        NodeTest::Threshold(rng.gen_range(0..1 << t))
    };
    TreeNode::Decision {
        node: DecisionNode { feature: rng.gen_range(0..n), test },
        left: Box::new(irregular(rng, depth - 1, n, t)),
        right: Box::new(irregular(rng, depth - 1, n, t)),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn padding_preserves_evaluation(seed in any::<u64>(), extra in 0u32..3) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let (n, t) = (rng.gen_range(1..5), rng.gen_range(2..6));
        let model = TreeModel { n, t, frac_bits: 0, root: irregular(&mut rng, 4, n, t) };
        let target = model.height().max(1) + extra;
        let tree = pad_complete(&model, target).unwrap();
        prop_assert_eq!(tree.h, target);
        prop_assert_eq!(tree.nodes.len(), tree.m());
        prop_assert_eq!(tree.leaves.len(), tree.k());
        for _ in 0..20 {
            let x = random_features(n, t, &mut rng);
            prop_assert_eq!(eval_plain(&tree, &x).0, model.eval(&x));
        }
    }

    #[test]
    fn one_zero_cost_on_the_taken_path(seed in any::<u64>()) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let shape = TreeShape { h: rng.gen_range(1..7), n: rng.gen_range(1..8), t: rng.gen_range(1..10) };
        let tree = random_tree(shape, 10, 0.2, &mut rng);
        let x = random_features(shape.n, shape.t, &mut rng);
        let (label, b, leaf) = eval_plain(&tree, &x);
        let costs = path_costs_plain(&tree, &b);
        prop_assert_eq!(costs.iter().filter(|&&c| c == 0).count(), 1);
        prop_assert_eq!(costs[leaf], 0);
        prop_assert_eq!(label, tree.leaves[leaf]);
        prop_assert!(costs.iter().all(|&c| c <= shape.h));
    }

    #[test]
    fn feature_matrix_selects_node_features(seed in any::<u64>()) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let shape = TreeShape { h: rng.gen_range(1..5), n: rng.gen_range(1..10), t: 8 };
        let tree = random_tree(shape, 4, 0.0, &mut rng);
        let x = random_features(shape.n, shape.t, &mut rng);
        let selected = build_feature_matrix(&tree).apply(&x.0);
        for (j, node) in tree.nodes.iter().enumerate() {
            prop_assert_eq!(selected[j], x.0[node.feature]);
        }
    }

    #[test]
    fn gbdt_aggregate_is_bias_plus_weighted_sum(seed in any::<u64>()) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let shape = TreeShape { h: rng.gen_range(1..4), n: 3, t: 6 };
        let trees: Vec<_> = (0..rng.gen_range(1..5)).map(|_| random_tree(shape, 12, 0.1, &mut rng)).collect();
        let model = GbdtModel { trees, eta: rng.gen_range(-64..64), t0: rng.gen_range(-4096..4096), frac_bits: 0 };
        let x = random_features(3, 6, &mut rng);
        let sum: i64 = model.trees.iter().map(|t| eval_plain(t, &x).0).sum();
        prop_assert_eq!(eval_gbdt_plain(&model, &x, 80).unwrap(), i128::from(model.t0 + model.eta * sum));
    }
}

#[test]
fn exported_documents_reload() {
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    for _ in 0..50 {
        let model = TreeModel { n: 3, t: 5, frac_bits: 0, root: irregular(&mut rng, 4, 3, 5) };
        if model.height() == 0 {
            assert!(load_tree(&serde_json::to_string(&to_doc(&model)).unwrap()).is_err());
            continue;
        }
        let json = serde_json::to_string(&to_doc(&model)).unwrap();
        assert_eq!(load_tree(&json).unwrap(), model);
    }
}

#[test]
fn gbdt_overflow_is_reported() {
    let mut rng = ChaCha20Rng::seed_from_u64(10);
    let shape = TreeShape { h: 2, n: 2, t: 4 };
    let mut tree = random_tree(shape, 20, 0.0, &mut rng);
    tree.leaves = vec![1 << 20; 4];
    let model = GbdtModel { trees: vec![tree], eta: 1 << 20, t0: 0, frac_bits: 0 };
    let x = random_features(2, 4, &mut rng);
    assert!(eval_gbdt_plain(&model, &x, 30).is_err());
    assert_eq!(eval_gbdt_plain(&model, &x, 41).unwrap(), 1 << 40);
}

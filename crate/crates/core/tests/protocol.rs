use std::sync::Arc;

use hsstree_core::compare::bit_decompose;
use hsstree_core::hss::oracle::{self, OracleEncryptor, OracleEvaluator};
use hsstree_core::hss::paillier::{self, EscrowDecryptor, KeySet, PaillierEvaluator, PublicKey};
use hsstree_core::hss::{Decryptor, Encryptor, Evaluator};
use hsstree_core::protocol::{
    chosen_position, client_build_query, derive_mask_plan, encrypt_gbdt_model, encrypt_tree_model,
    expected_muls, reconstruct, reconstruct_gbdt, server_evaluate, server_evaluate_with_plan, sfs,
    verify, GbdtMasks, Mode, Reject, TamperField,
};
use hsstree_core::tree::{
    eval_gbdt_plain, eval_plain, load_tree, pad_complete, random_features, random_tree,
    DecisionNode, DecisionTree, FeatureVector, GbdtModel, NodeTest, TreeShape,
};
use hsstree_core::{HssError, Profile};
use num_bigint::{BigInt, BigUint};
use num_traits::Zero;
use once_cell::sync::Lazy;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

static TOY: Lazy<KeySet> =
    Lazy::new(|| paillier::setup(Profile::Toy.params(), &mut ChaCha20Rng::seed_from_u64(41)).unwrap());

fn paillier_backend() -> (Arc<PublicKey>, PaillierEvaluator, PaillierEvaluator) {
    let pk = Arc::new(TOY.pk.clone());
    let e0 = PaillierEvaluator::new(pk.clone(), TOY.ek0.clone());
    let e1 = PaillierEvaluator::new(pk.clone(), TOY.ek1.clone());
    (pk, e0, e1)
}

fn oracle_backend() -> (OracleEncryptor, OracleEvaluator, OracleEvaluator) {
    oracle::setup(TOY.pk.n.clone(), 17)
}

const MIXED: &str = r#"{
    "n": 3, "t": 4, "frac_bits": 0,
    "nodes": [
        {"id": 1, "feature": 2, "kind": "threshold", "threshold": 3, "left": 2, "right": 3},
        {"id": 2, "feature": 1, "kind": "threshold", "threshold": -2, "left": {"leaf": 1}, "right": {"leaf": 2}},
        {"id": 3, "feature": 3, "kind": "member", "set": [1, 6, 12], "left": {"leaf": 3}, "right": {"leaf": 4}}
    ],
    "leaves": [{"id": 1, "label": 10}, {"id": 2, "label": 20}, {"id": 3, "label": 30}, {"id": 4, "label": -40}]
}"#;

fn mixed_tree() -> DecisionTree {
    let m = load_tree(MIXED).unwrap();
    pad_complete(&m, m.height()).unwrap()
}

fn run_verifiable<E, V>(enc: &E, e0: &V, e1: &V, tree: &DecisionTree, x: &FeatureVector, rng: &mut ChaCha20Rng) -> BigInt
where
    E: Encryptor,
    V: Evaluator<Ciphertext = E::Ciphertext>,
{
    let model = encrypt_tree_model(enc, tree, rng).unwrap();
    let (q, secret) = client_build_query(enc, &model.feature_maps(), x, tree.t, Mode::Verifiable, rng).unwrap();
    let r0 = server_evaluate(e0, &model, &q).unwrap();
    let r1 = server_evaluate(e1, &model, &q).unwrap();
    verify(&r0, &r1, secret.mac_key.as_ref().unwrap(), enc.modulus()).unwrap()
}

#[test]
fn mixed_node_kinds_every_input_on_oracle() {
    let (enc, e0, e1) = oracle_backend();
    let tree = mixed_tree();
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    for x0 in 0..16 {
        for x1 in [0, 3, 8, 15] {
            for x2 in [1, 2, 6, 12, 13] {
                let x = FeatureVector(vec![x0, x1, x2]);
                let got = run_verifiable(&enc, &e0, &e1, &tree, &x, &mut rng);
                assert_eq!(got, BigInt::from(eval_plain(&tree, &x).0), "x = {x:?}");
            }
        }
    }
}

#[test]
fn mixed_node_kinds_on_paillier() {
    let (pk, e0, e1) = paillier_backend();
    let tree = mixed_tree();
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    for x in [[15, 0, 6], [0, 12, 1], [7, 2, 12], [3, 15, 3], [0, 0, 0], [9, 11, 13]] {
        let x = FeatureVector(x.to_vec());
        let got = run_verifiable(pk.as_ref(), &e0, &e1, &tree, &x, &mut rng);
        assert_eq!(got, BigInt::from(eval_plain(&tree, &x).0), "x = {x:?}");
    }
}

#[test]
fn random_trees_all_single_tree_modes() {
    let (pk, e0, e1) = paillier_backend();
    let n = pk.n.clone();
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    for trial in 0..12 {
        let shape = TreeShape { h: rng.gen_range(1..=3), n: rng.gen_range(1..=5), t: rng.gen_range(2..=6) };
        let tree = random_tree(shape, 10, 0.3, &mut rng);
        let x = random_features(shape.n, shape.t, &mut rng);
        let model = encrypt_tree_model(pk.as_ref(), &tree, &mut rng).unwrap();
        let want = BigInt::from(eval_plain(&tree, &x).0);
        for mode in [Mode::Plain, Mode::Verifiable] {
            let (q, s) = client_build_query(pk.as_ref(), &model.feature_maps(), &x, shape.t, mode, &mut rng).unwrap();
            e0.gates().reset();
            let r0 = server_evaluate(&e0, &model, &q).unwrap();
            let r1 = server_evaluate(&e1, &model, &q).unwrap();
            assert_eq!(e0.gates().muls(), expected_muls(&model, mode), "trial {trial}");
            let got = match mode {
                Mode::Plain => reconstruct(&r0, &r1, &n).unwrap(),
                _ => verify(&r0, &r1, s.mac_key.as_ref().unwrap(), &n).unwrap(),
            };
            assert_eq!(got, want, "trial {trial} {mode}");
        }
    }
}

#[test]
fn plain_gate_count_formula() {
    let (enc, e0, e1) = oracle_backend();
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    for h in 1..=3u32 {
        let tree = random_tree(TreeShape { h, n: 4, t: 10 }, 8, 0.0, &mut rng);
        let model = encrypt_tree_model(&enc, &tree, &mut rng).unwrap();
        let x = random_features(4, 10, &mut rng);
        let (q, _) = client_build_query(&enc, &model.feature_maps(), &x, 10, Mode::Plain, &mut rng).unwrap();
        for (ev, mode) in [(&e0, Mode::Plain), (&e1, Mode::Plain)] {
            let before = ev.gates().muls();
            server_evaluate(ev, &model, &q).unwrap();
            let (m, k) = (tree.m() as u64, tree.k() as u64);
            assert_eq!(ev.gates().muls() - before, m * 38 + k);
            assert_eq!(expected_muls(&model, mode), m * 38 + k);
        }
        assert_eq!(expected_muls(&model, Mode::Verifiable), tree.m() as u64 * 38 + 2 * tree.k() as u64);
    }
}

#[test]
fn verifiable_response_carries_three_k_shares() {
    let (enc, e0, _) = oracle_backend();
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let tree = random_tree(TreeShape { h: 3, n: 3, t: 4 }, 8, 0.0, &mut rng);
    let model = encrypt_tree_model(&enc, &tree, &mut rng).unwrap();
    let x = random_features(3, 4, &mut rng);
    let (q, _) = client_build_query(&enc, &model.feature_maps(), &x, 4, Mode::Verifiable, &mut rng).unwrap();
    assert_eq!(server_evaluate(&e0, &model, &q).unwrap().share_count(), 3 * tree.k());
    let (q, _) = client_build_query(&enc, &model.feature_maps(), &x, 4, Mode::Plain, &mut rng).unwrap();
    assert_eq!(server_evaluate(&e0, &model, &q).unwrap().share_count(), 2 * tree.k());
}

#[test]
fn mac_of_known_key_and_label() {
    // A = 7, v = 5 at the chosen leaf: w reconstructs to 35.
    let (pk, e0, e1) = paillier_backend();
    let n = pk.n.clone();
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let tree = DecisionTree {
        h: 1,
        n: 1,
        t: 3,
        frac_bits: 0,
        nodes: vec![DecisionNode { feature: 0, test: NodeTest::Threshold(2) }],
        leaves: vec![5, 9],
    };
    let model = encrypt_tree_model(pk.as_ref(), &tree, &mut rng).unwrap();
    let x = FeatureVector(vec![6]);
    let (mut q, _) = client_build_query(pk.as_ref(), &model.feature_maps(), &x, 3, Mode::Verifiable, &mut rng).unwrap();
    q.c_a = Some(pk.input_u64(7, &mut rng).unwrap());
    let r0 = server_evaluate(&e0, &model, &q).unwrap();
    let r1 = server_evaluate(&e1, &model, &q).unwrap();
    let i = chosen_position(&r0, &r1, 0, &n).unwrap();
    let w = hsstree_core::hss::sub_mod(r1.trees[0][i].w.as_ref().unwrap(), r0.trees[0][i].w.as_ref().unwrap(), &n);
    assert_eq!(w, BigUint::from(35u32));
    assert_eq!(verify(&r0, &r1, &BigUint::from(7u32), &n).unwrap(), BigInt::from(5));
}

#[test]
fn tampering_is_rejected() {
    let (pk, e0, e1) = paillier_backend();
    let n = pk.n.clone();
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let tree = random_tree(TreeShape { h: 3, n: 4, t: 5 }, 10, 0.2, &mut rng);
    let model = encrypt_tree_model(pk.as_ref(), &tree, &mut rng).unwrap();
    let x = random_features(4, 5, &mut rng);
    let (q, s) = client_build_query(pk.as_ref(), &model.feature_maps(), &x, 5, Mode::Verifiable, &mut rng).unwrap();
    let a = s.mac_key.unwrap();
    let r0 = server_evaluate(&e0, &model, &q).unwrap();
    let r1 = server_evaluate(&e1, &model, &q).unwrap();
    let chosen = chosen_position(&r0, &r1, 0, &n).unwrap();
    assert_eq!(verify(&r0, &r1, &a, &n).unwrap(), BigInt::from(eval_plain(&tree, &x).0));

    for field in [TamperField::V, TamperField::W] {
        let mut bad = r0.clone();
        bad.tamper(0, chosen, field, &BigUint::from(1u32), &n).unwrap();
        assert_eq!(verify(&bad, &r1, &a, &n), Err(Reject::MacMismatch), "{field}");
    }

    // Force a second zero path cost at another position.
    let other = (chosen + 1) % tree.k();
    let diff = hsstree_core::hss::sub_mod(&r1.trees[0][other].pc, &r0.trees[0][other].pc, &n);
    let mut bad = r0.clone();
    bad.tamper(0, other, TamperField::Pc, &diff, &n).unwrap();
    assert_eq!(verify(&bad, &r1, &a, &n), Err(Reject::MultipleZeros { tree: 0, count: 2 }));

    // Remove the only zero.
    let mut bad = r1.clone();
    bad.tamper(0, chosen, TamperField::Pc, &BigUint::from(1u32), &n).unwrap();
    assert_eq!(verify(&r0, &bad, &a, &n), Err(Reject::NoZero { tree: 0 }));

    assert!(matches!(verify(&r1, &r0, &a, &n), Err(Reject::Malformed(_))));
}

#[test]
fn non_chosen_entries_change_with_the_nonce() {
    let (enc, e0, e1) = oracle_backend();
    let n = enc.modulus().clone();
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    let tree = random_tree(TreeShape { h: 2, n: 3, t: 4 }, 8, 0.0, &mut rng);
    let model = encrypt_tree_model(&enc, &tree, &mut rng).unwrap();
    let x = random_features(3, 4, &mut rng);
    let reveal = |rng: &mut ChaCha20Rng| {
        let (q, _) = client_build_query(&enc, &model.feature_maps(), &x, 4, Mode::Plain, rng).unwrap();
        let r0 = server_evaluate(&e0, &model, &q).unwrap();
        let r1 = server_evaluate(&e1, &model, &q).unwrap();
        let mut by_value: Vec<(BigUint, BigUint)> = r0.trees[0]
            .iter()
            .zip(&r1.trees[0])
            .map(|(a, b)| (hsstree_core::hss::sub_mod(&b.pc, &a.pc, &n), hsstree_core::hss::sub_mod(&b.v, &a.v, &n)))
            .filter(|(pc, _)| !pc.is_zero())
            .collect();
        by_value.sort();
        by_value
    };
    let first = reveal(&mut rng);
    let second = reveal(&mut rng);
    assert_eq!(first.len(), tree.k() - 1);
    for entry in &first {
        assert!(!second.contains(entry));
    }
}

#[test]
fn sfs_selects_the_mapped_feature_bits() {
    let (pk, _, _) = paillier_backend();
    let dec = EscrowDecryptor { pk: pk.clone(), escrow: TOY.escrow.clone() };
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    for _ in 0..4 {
        let tree = random_tree(TreeShape { h: 2, n: 4, t: 5 }, 6, 0.0, &mut rng);
        let model = encrypt_tree_model(pk.as_ref(), &tree, &mut rng).unwrap();
        let x = random_features(4, 5, &mut rng);
        let cmx = sfs(pk.as_ref(), &model.trees[0].cm, &x, 5, &mut rng).unwrap();
        for (j, row) in cmx.iter().enumerate() {
            let bits: Vec<u8> = row
                .bits
                .iter()
                .map(|c| dec.decrypt(c).unwrap().0.try_into().unwrap())
                .collect();
            assert_eq!(bits, bit_decompose(x.0[tree.nodes[j].feature], 5));
        }
    }
    let zero = FeatureVector(vec![0; 4]);
    let tree = random_tree(TreeShape { h: 1, n: 4, t: 3 }, 6, 0.0, &mut rng);
    let model = encrypt_tree_model(pk.as_ref(), &tree, &mut rng).unwrap();
    let cmx = sfs(pk.as_ref(), &model.trees[0].cm, &zero, 3, &mut rng).unwrap();
    assert!(cmx[0].bits.iter().all(|c| dec.decrypt(c).unwrap().0.is_zero()));
}

#[test]
fn encrypted_thresholds_decrypt_to_their_bits() {
    let (pk, _, _) = paillier_backend();
    let dec = EscrowDecryptor { pk: pk.clone(), escrow: TOY.escrow.clone() };
    let mut rng = ChaCha20Rng::seed_from_u64(10);
    let tree = mixed_tree();
    let model = encrypt_tree_model(pk.as_ref(), &tree, &mut rng).unwrap();
    let t = &model.trees[0];
    assert_eq!((t.tests.len(), t.cv.len(), t.cm.len(), t.cm[0].len()), (3, 4, 3, 3));
    let NodeTest::Threshold(y) = tree.nodes[0].test else { panic!() };
    let hsstree_core::protocol::EncryptedTest::Threshold(cy) = &t.tests[0] else { panic!() };
    let bits: Vec<u8> = cy.bits.iter().map(|c| dec.decrypt(c).unwrap().0.try_into().unwrap()).collect();
    assert_eq!(bits, bit_decompose(y, 4));
}

#[test]
fn queries_are_fresh() {
    let (pk, _, _) = paillier_backend();
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    let tree = mixed_tree();
    let model = encrypt_tree_model(pk.as_ref(), &tree, &mut rng).unwrap();
    let x = FeatureVector(vec![1, 2, 3]);
    let (q1, s1) = client_build_query(pk.as_ref(), &model.feature_maps(), &x, 4, Mode::Verifiable, &mut rng).unwrap();
    let (q2, s2) = client_build_query(pk.as_ref(), &model.feature_maps(), &x, 4, Mode::Verifiable, &mut rng).unwrap();
    assert_ne!(s1.nonce, s2.nonce);
    assert_ne!(s1.mac_key, s2.mac_key);
    assert_ne!(q1.cmx, q2.cmx);
    let dec = EscrowDecryptor { pk: pk.clone(), escrow: TOY.escrow.clone() };
    assert_eq!(dec.decrypt(q1.c_a.as_ref().unwrap()).unwrap().0, s1.mac_key.unwrap());
}

#[test]
fn dimension_mismatch_is_a_protocol_error() {
    let (enc, e0, _) = oracle_backend();
    let mut rng = ChaCha20Rng::seed_from_u64(12);
    let tree = random_tree(TreeShape { h: 2, n: 3, t: 4 }, 8, 0.0, &mut rng);
    let model = encrypt_tree_model(&enc, &tree, &mut rng).unwrap();
    let x = random_features(3, 4, &mut rng);
    let (q, _) = client_build_query(&enc, &model.feature_maps(), &x, 4, Mode::Verifiable, &mut rng).unwrap();

    let mut short = q.clone();
    short.cmx[0].pop();
    assert!(matches!(server_evaluate(&e0, &model, &short), Err(HssError::Protocol(_))));
    let mut narrow = q.clone();
    narrow.cmx[0][1].bits.pop();
    assert!(matches!(server_evaluate(&e0, &model, &narrow), Err(HssError::Protocol(_))));
    let mut no_key = q.clone();
    no_key.c_a = None;
    assert!(matches!(server_evaluate(&e0, &model, &no_key), Err(HssError::Protocol(_))));
    let mut gbdt = q;
    gbdt.mode = Mode::Gbdt;
    assert!(matches!(server_evaluate(&e0, &model, &gbdt), Err(HssError::Protocol(_))));
}

fn random_gbdt(rng: &mut ChaCha20Rng, s: usize, h: u32, n: usize, t: u32, f: u32) -> GbdtModel {
    let trees = (0..s)
        .map(|_| {
            let mut tree = random_tree(TreeShape { h, n, t }, t + f, 0.2, rng);
            tree.frac_bits = f;
            tree
        })
        .collect();
    GbdtModel { trees, eta: rng.gen_range(1..1i64 << f), t0: rng.gen_range(-(1i64 << (2 * f + 4))..1 << (2 * f + 4)), frac_bits: f }
}

#[test]
fn gbdt_matches_plaintext_aggregate() {
    let (pk, e0, e1) = paillier_backend();
    let n = pk.n.clone();
    let payload = Profile::Toy.params().payload_bits();
    let mut rng = ChaCha20Rng::seed_from_u64(13);
    for _ in 0..5 {
        let s = rng.gen_range(1..=3);
        let h = rng.gen_range(1..=2);
        let model = random_gbdt(&mut rng, s, h, 3, 5, 4);
        let enc_model = encrypt_gbdt_model(pk.as_ref(), &model, &mut rng).unwrap();
        let x = random_features(3, 5, &mut rng);
        let (q, secret) = client_build_query(pk.as_ref(), &enc_model.feature_maps(), &x, 5, Mode::Gbdt, &mut rng).unwrap();
        e0.gates().reset();
        let r0 = server_evaluate(&e0, &enc_model, &q).unwrap();
        let r1 = server_evaluate(&e1, &enc_model, &q).unwrap();
        assert_eq!(e0.gates().muls(), expected_muls(&enc_model, Mode::Gbdt));
        let got = reconstruct_gbdt(&r0, &r1, secret.mac_key.as_ref().unwrap(), &n).unwrap();
        assert_eq!(got, BigInt::from(eval_gbdt_plain(&model, &x, payload).unwrap()));

        let mut bad = r1.clone();
        let tree = rng.gen_range(0..s);
        let pos = chosen_position(&r0, &r1, tree, &n).unwrap();
        bad.tamper(tree, pos, TamperField::W, &BigUint::from(3u32), &n).unwrap();
        assert_eq!(reconstruct_gbdt(&r0, &bad, secret.mac_key.as_ref().unwrap(), &n), Err(Reject::MacMismatch));
    }
}

#[test]
fn gbdt_masks_hide_trees_but_cancel_in_the_sum() {
    let (enc, e0, e1) = oracle_backend();
    let n = enc.modulus().clone();
    let mut rng = ChaCha20Rng::seed_from_u64(14);
    let model = random_gbdt(&mut rng, 3, 2, 3, 5, 3);
    let enc_model = encrypt_gbdt_model(&enc, &model, &mut rng).unwrap();
    let x = random_features(3, 5, &mut rng);
    let (q, secret) = client_build_query(&enc, &enc_model.feature_maps(), &x, 5, Mode::Gbdt, &mut rng).unwrap();
    let a = secret.mac_key.unwrap();

    let masked = derive_mask_plan(e0.prf_key(), &n, &q.nonce, &enc_model.leaves_per_tree(), true);
    let mut clear = masked.clone();
    clear.gbdt = Some(GbdtMasks::zeroed(3));
    let run = |plan| {
        (
            server_evaluate_with_plan(&e0, &enc_model, &q, plan).unwrap(),
            server_evaluate_with_plan(&e1, &enc_model, &q, plan).unwrap(),
        )
    };
    let (m0, m1) = run(&masked);
    let (c0, c1) = run(&clear);
    assert_eq!(reconstruct_gbdt(&m0, &m1, &a, &n), reconstruct_gbdt(&c0, &c1, &a, &n));
    for tree in 0..3 {
        let i = chosen_position(&c0, &c1, tree, &n).unwrap();
        let mu_clear = hsstree_core::hss::sub_mod(&c1.trees[tree][i].v, &c0.trees[tree][i].v, &n);
        let mu_masked = hsstree_core::hss::sub_mod(&m1.trees[tree][i].v, &m0.trees[tree][i].v, &n);
        let eta_v = BigInt::from(model.eta) * BigInt::from(eval_plain(&model.trees[tree], &x).0);
        assert_eq!(hsstree_core::hss::reduce(&eta_v, &n), mu_clear);
        assert_ne!(mu_clear, mu_masked);
    }
}

#[test]
fn degenerate_ensemble_is_a_verified_tree_plus_bias() {
    let (enc, e0, e1) = oracle_backend();
    let n = enc.modulus().clone();
    let mut rng = ChaCha20Rng::seed_from_u64(15);
    let tree = random_tree(TreeShape { h: 2, n: 2, t: 4 }, 6, 0.0, &mut rng);
    let model = GbdtModel { trees: vec![tree.clone()], eta: 1, t0: 11, frac_bits: 0 };
    let enc_model = encrypt_gbdt_model(&enc, &model, &mut rng).unwrap();
    let x = random_features(2, 4, &mut rng);
    let (q, secret) = client_build_query(&enc, &enc_model.feature_maps(), &x, 4, Mode::Gbdt, &mut rng).unwrap();
    let mut plan = derive_mask_plan(e0.prf_key(), &n, &q.nonce, &[4], true);
    plan.gbdt = Some(GbdtMasks::zeroed(1));
    let r0 = server_evaluate_with_plan(&e0, &enc_model, &q, &plan).unwrap();
    let r1 = server_evaluate_with_plan(&e1, &enc_model, &q, &plan).unwrap();
    let got = reconstruct_gbdt(&r0, &r1, secret.mac_key.as_ref().unwrap(), &n).unwrap();
    assert_eq!(got, BigInt::from(eval_plain(&tree, &x).0 + 11));
}

#[test]
fn zero_position_spreads_over_all_leaves() {
    // Chi-squared over 4·k·100 nonces with the same tree and input.
    let (enc, e0, e1) = oracle_backend();
    let n = enc.modulus().clone();
    let mut rng = ChaCha20Rng::seed_from_u64(16);
    let tree = random_tree(TreeShape { h: 2, n: 2, t: 2 }, 4, 0.0, &mut rng);
    let model = encrypt_tree_model(&enc, &tree, &mut rng).unwrap();
    let x = random_features(2, 2, &mut rng);
    let k = tree.k();
    let trials = 4 * k * 100;
    let mut counts = vec![0usize; k];
    let (q, _) = client_build_query(&enc, &model.feature_maps(), &x, 2, Mode::Plain, &mut rng).unwrap();
    let r0 = server_evaluate(&e0, &model, &q).unwrap();
    let r1 = server_evaluate(&e1, &model, &q).unwrap();
    let base = chosen_position(&r0, &r1, 0, &n).unwrap();
    let chosen_leaf = eval_plain(&tree, &x).2;
    for _ in 0..trials {
        let mut nonce = [0u8; 16];
        rng.fill(&mut nonce);
        // Only the permutation matters here; derive it directly.
        let plan = derive_mask_plan(e0.prf_key(), &n, &nonce, &[k], false);
        counts[plan.trees[0].pi[chosen_leaf]] += 1;
    }
    let expected = trials as f64 / k as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // 3 degrees of freedom, p = 0.001
    assert!(chi2 < 16.27, "chi2 = {chi2}, counts = {counts:?}");
    assert!(base < k);
}

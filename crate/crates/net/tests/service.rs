use std::net::TcpListener;
use std::sync::Arc;
use std::time::{Duration, Instant};

use hsstree_core::hss::paillier::{self, KeySet};
use hsstree_core::protocol::{
    client_build_query, encrypt_gbdt_model, encrypt_tree_model, expected_muls, reconstruct, reconstruct_gbdt,
    verify, Mode,
};
use hsstree_core::tree::{eval_gbdt_plain, eval_plain, random_features, random_tree, GbdtModel, TreeShape};
use hsstree_core::wire::{encode_model, encode_query};
use hsstree_core::Profile;
use hsstree_net::*;
use num_bigint::BigInt;
use once_cell::sync::Lazy;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

static TOY: Lazy<KeySet> =
    Lazy::new(|| paillier::setup(Profile::Toy.params(), &mut ChaCha20Rng::seed_from_u64(77)).unwrap());
const MB: u32 = 192;

fn servers(ledger: &Arc<LinkLedger>) -> (Arc<Server>, Arc<Server>) {
    let pk = Arc::new(TOY.pk.clone());
    let s0 = Server::new(pk.clone(), TOY.ek0.clone(), Arc::new(ModelStore::in_memory()), ledger.clone());
    let s1 = Server::new(pk, TOY.ek1.clone(), Arc::new(ModelStore::in_memory()), ledger.clone());
    (Arc::new(s0), Arc::new(s1))
}

fn loopback() -> Loopback {
    let (s0, s1) = servers(&Arc::new(LinkLedger::new()));
    Loopback::new(s0, s1)
}

#[test]
fn loopback_all_modes_zero_s2s() {
    let net = loopback();
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let n = &TOY.pk.n;
    let shape = TreeShape { h: 2, n: 3, t: 10 };
    let tree = random_tree(shape, 16, 0.0, &mut rng);
    let model = encrypt_tree_model(&TOY.pk, &tree, &mut rng).unwrap();
    let id = upload_model(&net, encode_model(&model, MB).unwrap()).unwrap();
    for (i, mode) in [Mode::Plain, Mode::Verifiable].into_iter().enumerate() {
        let x = random_features(3, 10, &mut rng);
        let (q, secret) = client_build_query(&TOY.pk, &model.feature_maps(), &x, 10, mode, &mut rng).unwrap();
        let before = net.ledger().stats(Link::ClientServer0);
        let out = submit_query(&net, id, i as u64, &q, MB).unwrap();
        let [r0, r1] = &out.responses;
        let label = match mode {
            Mode::Plain => reconstruct(r0, r1, n).unwrap(),
            _ => verify(r0, r1, secret.mac_key.as_ref().unwrap(), n).unwrap(),
        };
        assert_eq!(label, BigInt::from(eval_plain(&tree, &x).0));
        // 3·38 comparison gates plus the per-leaf terms of the mode.
        let want = expected_muls(&model, mode);
        assert_eq!(want, 3 * 38 + if mode == Mode::Plain { 4 } else { 8 });
        assert_eq!(out.stats.map(|s| s.muls), [want, want]);
        let after = net.ledger().stats(Link::ClientServer0);
        assert_eq!(after.messages - before.messages, 2);
        let upload = encode_query(&q, MB).unwrap().len() + 14 + 32 + 8;
        assert_eq!(out.request_bytes, upload);
        assert_eq!(after.bytes - before.bytes, (upload + out.response_bytes[0]) as u64);
    }

    let gbdt = GbdtModel {
        trees: (0..3).map(|_| random_tree(TreeShape { h: 2, n: 3, t: 6 }, 8, 0.2, &mut rng)).collect(),
        eta: 3,
        t0: -11,
        frac_bits: 0,
    };
    let em = encrypt_gbdt_model(&TOY.pk, &gbdt, &mut rng).unwrap();
    let gid = upload_model(&net, encode_model(&em, MB).unwrap()).unwrap();
    let x = random_features(3, 6, &mut rng);
    let (q, secret) = client_build_query(&TOY.pk, &em.feature_maps(), &x, 6, Mode::Gbdt, &mut rng).unwrap();
    let out = submit_query(&net, gid, 9, &q, MB).unwrap();
    let got = reconstruct_gbdt(&out.responses[0], &out.responses[1], secret.mac_key.as_ref().unwrap(), n).unwrap();
    assert_eq!(got, BigInt::from(eval_gbdt_plain(&gbdt, &x, 80).unwrap()));

    let m = net.ledger().report();
    assert_eq!(m.link(Link::Server0Server1), LinkStats { link: Link::Server0Server1, messages: 0, bytes: 0, rtt_ms: 0 });
    assert_eq!(m.link(Link::ProviderServers).messages, 8);
    assert_eq!(m.queries.len(), 6);
}

#[test]
fn errors_are_reported_with_codes() {
    let net = loopback();
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let tree = random_tree(TreeShape { h: 1, n: 2, t: 3 }, 4, 0.0, &mut rng);
    let model = encrypt_tree_model(&TOY.pk, &tree, &mut rng).unwrap();
    let x = random_features(2, 3, &mut rng);
    let (q, _) = client_build_query(&TOY.pk, &model.feature_maps(), &x, 3, Mode::Plain, &mut rng).unwrap();

    let missing = ModelId::of(b"nothing");
    match submit_query(&net, missing, 1, &q, MB) {
        Err(NetError::Server { code, .. }) => assert_eq!(code, code::UNKNOWN_MODEL),
        other => panic!("{other:?}"),
    }

    let id = upload_model(&net, encode_model(&model, MB).unwrap()).unwrap();
    let other = random_tree(TreeShape { h: 2, n: 2, t: 3 }, 4, 0.0, &mut rng);
    let om = encrypt_tree_model(&TOY.pk, &other, &mut rng).unwrap();
    let (wrong, _) = client_build_query(&TOY.pk, &om.feature_maps(), &x, 3, Mode::Plain, &mut rng).unwrap();
    match submit_query(&net, id, 2, &wrong, MB) {
        Err(NetError::Server { code, .. }) => assert_eq!(code, code::PROTOCOL),
        other => panic!("{other:?}"),
    }

    let bad = Message::Query { model_id: id, query_id: 3, query: vec![1, 2, 3] }.to_frame();
    match Message::from_frame(&net.exchange(Party::Client, 0, &bad).unwrap()).unwrap() {
        Message::Error { query_id, code, .. } => assert_eq!((query_id, code), (3, code::MALFORMED_QUERY)),
        other => panic!("{other:?}"),
    }
    let empty = Frame::new(MsgType::Query, vec![]);
    match Message::from_frame(&net.exchange(Party::Client, 1, &empty).unwrap()).unwrap() {
        Message::Error { code, .. } => assert_eq!(code, code::MALFORMED_FRAME),
        other => panic!("{other:?}"),
    }
    let mut tampered = encode_model(&model, MB).unwrap();
    let last = tampered.len() - 1;
    tampered[last] ^= 1;
    let forged = Message::ModelUpload { model_id: id, model: tampered }.to_frame();
    match Message::from_frame(&net.exchange(Party::Provider, 0, &forged).unwrap()).unwrap() {
        Message::Error { code, .. } => assert_eq!(code, code::MODEL_REJECTED),
        other => panic!("{other:?}"),
    }
    assert_eq!(net.ledger().s2s().messages, 0);
}

#[test]
fn tcp_service_round_trip_and_metrics() {
    let (s0, s1) = (servers(&Arc::new(LinkLedger::new())), servers(&Arc::new(LinkLedger::new())));
    // Each server gets its own ledger, as separate processes would.
    let h0 = serve(s0.0.clone(), &ServiceConfig::new("127.0.0.1:0")).unwrap();
    let h1 = serve(s1.1.clone(), &ServiceConfig::new("127.0.0.1:0")).unwrap();
    let client = TcpTransport::new(h0.addr().to_string(), h1.addr().to_string(), Duration::from_secs(30));
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let tree = random_tree(TreeShape { h: 3, n: 4, t: 5 }, 10, 0.2, &mut rng);
    let model = encrypt_tree_model(&TOY.pk, &tree, &mut rng).unwrap();
    let id = upload_model(&client, encode_model(&model, MB).unwrap()).unwrap();
    for i in 0..3 {
        let x = random_features(4, 5, &mut rng);
        let (q, secret) = client_build_query(&TOY.pk, &model.feature_maps(), &x, 5, Mode::Verifiable, &mut rng).unwrap();
        let out = submit_query(&client, id, i, &q, MB).unwrap();
        let label = verify(&out.responses[0], &out.responses[1], secret.mac_key.as_ref().unwrap(), &TOY.pk.n).unwrap();
        assert_eq!(label, BigInt::from(eval_plain(&tree, &x).0));
    }
    for sigma in 0..2u8 {
        let m = fetch_metrics(&client, sigma).unwrap();
        assert_eq!(m.queries.len(), 3);
        assert!(m.queries.iter().all(|q| q.server == sigma && q.muls == expected_muls(&model, Mode::Verifiable)));
        assert_eq!(m.link(Link::Server0Server1).messages, 0);
        // Three query exchanges plus the inbound metrics request.
        assert_eq!(m.link(Link::client_to(sigma)).messages, 7);
        assert_eq!(m.link(Link::client_to(1 - sigma)).messages, 0);
        assert_eq!(m.link(Link::ProviderServers).messages, 2);
    }
    let c = client.ledger().report();
    assert_eq!(c.link(Link::Server0Server1).bytes, 0);
    assert_eq!(c.link(Link::ClientServer0).messages, 8);
}

#[test]
fn dead_or_silent_server_names_the_link() {
    let (s0, s1) = servers(&Arc::new(LinkLedger::new()));
    let h0 = serve(s0, &ServiceConfig::new("127.0.0.1:0")).unwrap();
    let mut h1 = serve(s1, &ServiceConfig::new("127.0.0.1:0")).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let tree = random_tree(TreeShape { h: 1, n: 1, t: 2 }, 4, 0.0, &mut rng);
    let model = encrypt_tree_model(&TOY.pk, &tree, &mut rng).unwrap();
    let client = TcpTransport::new(h0.addr().to_string(), h1.addr().to_string(), Duration::from_secs(5));
    let id = upload_model(&client, encode_model(&model, MB).unwrap()).unwrap();
    let (q, _) = client_build_query(&TOY.pk, &model.feature_maps(), &random_features(1, 2, &mut rng), 2, Mode::Plain, &mut rng)
        .unwrap();
    submit_query(&client, id, 1, &q, MB).unwrap();

    let dead = h1.addr().to_string();
    h1.shutdown();
    let client = TcpTransport::new(h0.addr().to_string(), dead, Duration::from_secs(2));
    let err = submit_query(&client, id, 2, &q, MB).unwrap_err();
    assert_eq!(err.link(), Some(Link::ClientServer1), "{err}");

    // Accepts connections but never answers.
    let silent = TcpListener::bind("127.0.0.1:0").unwrap();
    let client = TcpTransport::new(silent.local_addr().unwrap().to_string(), h0.addr().to_string(), Duration::from_millis(300));
    let start = Instant::now();
    let err = submit_query(&client, id, 3, &q, MB).unwrap_err();
    assert_eq!(err.link(), Some(Link::ClientServer0), "{err}");
    assert!(err.to_string().contains("no reply"), "{err}");
    assert!(start.elapsed() < Duration::from_secs(5));
}

#[test]
fn store_persists_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let tree = random_tree(TreeShape { h: 2, n: 2, t: 4 }, 6, 0.3, &mut rng);
    let blob = encode_model(&encrypt_tree_model(&TOY.pk, &tree, &mut rng).unwrap(), MB).unwrap();
    let key = hsstree_core::wire::encode_eval_key(&TOY.ek0);
    let (mid, kid) = {
        let store = ModelStore::open(dir.path()).unwrap();
        (store.put_model(blob.clone()).unwrap().id, store.put_key(key.clone()).unwrap())
    };
    let store = ModelStore::open(dir.path()).unwrap();
    let m = store.get_model(&mid).unwrap().unwrap();
    assert_eq!(m.bytes, blob);
    assert_eq!(m.shape.heights, vec![2]);
    assert_eq!(**store.get_key(&kid).unwrap().unwrap(), key);
    assert_eq!(store.model_ids().unwrap(), vec![mid]);
    assert!(dir.path().join("models").join(format!("{mid}.json")).exists());
    assert!(store.get_model(&ModelId::of(b"x")).unwrap().is_none());

    let path = dir.path().join("models").join(format!("{mid}.bin"));
    let mut bytes = std::fs::read(&path).unwrap();
    bytes[20] ^= 0xff;
    std::fs::write(&path, bytes).unwrap();
    assert!(ModelStore::open(dir.path()).unwrap().get_model(&mid).is_err());
}

#[test]
fn client_rtt_adds_latency_only() {
    let net = loopback();
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let tree = random_tree(TreeShape { h: 1, n: 2, t: 4 }, 6, 0.0, &mut rng);
    let model = encrypt_tree_model(&TOY.pk, &tree, &mut rng).unwrap();
    let id = upload_model(&net, encode_model(&model, MB).unwrap()).unwrap();
    let (q, _) = client_build_query(&TOY.pk, &model.feature_maps(), &random_features(2, 4, &mut rng), 4, Mode::Plain, &mut rng)
        .unwrap();
    let fast = submit_query(&net, id, 1, &q, MB).unwrap();
    net.set_client_rtt(Duration::from_millis(100));
    let slow = submit_query(&net, id, 2, &q, MB).unwrap();
    assert!(slow.wall >= fast.wall + Duration::from_millis(95), "{:?} vs {:?}", slow.wall, fast.wall);
    assert_eq!(slow.stats[0].muls, fast.stats[0].muls);
    let m = net.ledger().report();
    assert_eq!(m.link(Link::ClientServer0).rtt_ms, 100);
    assert_eq!(m.link(Link::ProviderServers).rtt_ms, 0);
    assert_eq!(m.link(Link::Server0Server1).rtt_ms, 0);
}

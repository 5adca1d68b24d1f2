use std::io::Write;
use std::net::TcpStream;
use std::sync::Arc;
use std::time::Duration;

use hsstree_core::hss::paillier;
use hsstree_core::protocol::{client_build_query, encrypt_tree_model, Mode};
use hsstree_core::tree::{random_features, random_tree, TreeShape};
use hsstree_core::wire::{encode_model, encode_query};
use hsstree_core::Profile;
use hsstree_net::frame::DEFAULT_MAX_PAYLOAD;
use hsstree_net::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

const FRAMES: usize = 100_000;

fn mutate(seed: &[u8], rng: &mut ChaCha20Rng) -> Vec<u8> {
    let mut b = seed.to_vec();
    match rng.gen_range(0..7) {
        0 => {
            for _ in 0..rng.gen_range(1..5) {
                let i = rng.gen_range(0..b.len());
                b[i] ^= 1 << rng.gen_range(0..8);
            }
        }
        1 => {
            let i = rng.gen_range(0..b.len());
            b[i] = rng.gen();
        }
        2 => b.truncate(rng.gen_range(0..b.len())),
        3 => b.extend((0..rng.gen_range(1..64)).map(|_| rng.gen::<u8>())),
        4 => b[5] = rng.gen(),
        5 => {
            let len: u64 = match rng.gen_range(0..3) {
                0 => rng.gen(),
                1 => (b.len() as u64).saturating_sub(14) + rng.gen_range(1..9),
                _ => rng.gen_range(0..16),
            };
            b[6..14].copy_from_slice(&len.to_be_bytes());
        }
        _ => {
            // Mutate the payload but keep the header consistent.
            let cut = rng.gen_range(14..=b.len());
            b.truncate(cut);
            if b.len() > 14 {
                let i = rng.gen_range(14..b.len());
                b[i] = rng.gen();
            }
            let len = (b.len() - 14) as u64;
            b[6..14].copy_from_slice(&len.to_be_bytes());
        }
    }
    b
}

#[test]
fn mutated_frames_never_crash_the_server() {
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let ks = paillier::setup(Profile::Toy.params(), &mut rng).unwrap();
    let pk = Arc::new(ks.pk.clone());
    let ledger = Arc::new(LinkLedger::new());
    let server = Arc::new(Server::new(pk.clone(), ks.ek0.clone(), Arc::new(ModelStore::in_memory()), ledger.clone()));

    let tree = random_tree(TreeShape { h: 1, n: 1, t: 1 }, 4, 0.0, &mut rng);
    let model = encrypt_tree_model(pk.as_ref(), &tree, &mut rng).unwrap();
    let blob = encode_model(&model, 192).unwrap();
    let peer = Arc::new(Server::new(pk.clone(), ks.ek1.clone(), Arc::new(ModelStore::in_memory()), ledger.clone()));
    let id = upload_model(&Loopback::new(server.clone(), peer), blob.clone()).unwrap();
    let (q, _) =
        client_build_query(pk.as_ref(), &model.feature_maps(), &random_features(1, 1, &mut rng), 1, Mode::Verifiable, &mut rng)
            .unwrap();
    let seeds: Vec<Vec<u8>> = [
        Message::Query { model_id: id, query_id: 7, query: encode_query(&q, 192).unwrap() },
        Message::ModelUpload { model_id: id, model: blob },
        Message::Ping { payload: b"hello".to_vec() },
        Message::error(1, 3, "x"),
        Message::Response { query_id: 1, stats: ServerStats::default(), response: vec![1; 40] },
    ]
    .iter()
    .map(|m| m.to_frame().to_bytes())
    .collect();

    let mut kinds = [0usize; 6];
    for i in 0..FRAMES {
        let seed = &seeds[i % seeds.len()];
        let input = mutate(seed, &mut rng);
        let reply = server.handle_bytes(&input);
        let frame = Frame::from_bytes(&reply, DEFAULT_MAX_PAYLOAD).expect("reply is a valid frame");
        match Message::from_frame(&frame).expect("reply is a valid message") {
            Message::Error { code, detail, .. } => {
                assert_ne!(code, code::INTERNAL, "handler failed on {input:?}: {detail}");
                kinds[0] += 1;
            }
            Message::Response { .. } => kinds[1] += 1,
            Message::Ping { .. } => kinds[2] += 1,
            other => panic!("server sent {other:?}"),
        }
    }
    assert!(kinds[0] > FRAMES / 2, "{kinds:?}");
    assert_eq!(ledger.s2s().messages, 0);

    // The TCP front end drops a desynchronized stream and keeps serving.
    let handle = serve(server.clone(), &ServiceConfig::new("127.0.0.1:0")).unwrap();
    for i in 0..200 {
        let mut s = TcpStream::connect(handle.addr()).unwrap();
        s.set_read_timeout(Some(Duration::from_secs(10))).unwrap();
        let _ = s.write_all(&mutate(&seeds[i % seeds.len()], &mut rng));
        let _ = s.shutdown(std::net::Shutdown::Write);
        let _ = Frame::read_from(&mut s, DEFAULT_MAX_PAYLOAD);
    }
    let client = TcpTransport::new(handle.addr().to_string(), handle.addr().to_string(), Duration::from_secs(10));
    let pong = client.exchange(Party::Client, 0, &Message::Ping { payload: vec![9] }.to_frame()).unwrap();
    assert_eq!(Message::from_frame(&pong).unwrap(), Message::Ping { payload: vec![9] });
}

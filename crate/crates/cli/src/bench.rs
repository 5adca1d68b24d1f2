//! Benchmark scenarios over the loopback deployment.
//!
//! Gate counts, message counts and byte counts depend only on the scenario
//! and seed. Timings are whatever the machine gives.

use std::fmt::Write as _;
use std::sync::Arc;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use hsstree_core::hss::paillier::KeySet;
use hsstree_core::protocol::{client_build_query, expected_muls, Mode};
use hsstree_core::tree::{random_features, random_tree, GbdtModel, TreeShape, DEFAULT_MAX_HEIGHT};
use hsstree_core::wire::{encode_feature_maps, encode_model};
use hsstree_core::Profile;
use hsstree_net::{submit_query, upload_model, Link, LinkLedger, LinkStats};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::model::PlainModel;
use crate::session::{check_answer, loopback};
use crate::{median, seeded_rng};

pub const MAX_FEATURES: usize = 4096;
pub const MAX_TREES: usize = 64;
pub const MAX_TRIALS: usize = 10_000;
pub const LABEL_BITS: u32 = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchScenario {
    pub profile: Profile,
    pub h: u32,
    pub n: usize,
    pub t: u32,
    /// Ensemble size; 1 outside gbdt mode.
    pub trees: usize,
    pub mode: Mode,
    pub trials: usize,
    /// Injected round trip on each client link.
    pub rtt_ms: u64,
    pub seed: u64,
}

impl BenchScenario {
    pub fn validate(&self) -> Result<()> {
        if !(1..=DEFAULT_MAX_HEIGHT).contains(&self.h) {
            bail!("h = {} outside 1..={DEFAULT_MAX_HEIGHT}", self.h);
        }
        if !(1..=MAX_FEATURES).contains(&self.n) {
            bail!("n = {} outside 1..={MAX_FEATURES}", self.n);
        }
        if !(1..=32).contains(&self.t) {
            bail!("t = {} outside 1..=32", self.t);
        }
        if !(1..=MAX_TRIALS).contains(&self.trials) {
            bail!("trials = {} outside 1..={MAX_TRIALS}", self.trials);
        }
        match self.mode {
            Mode::Gbdt if !(1..=MAX_TREES).contains(&self.trees) => bail!("trees = {} outside 1..={MAX_TREES}", self.trees),
            Mode::Plain | Mode::Verifiable if self.trees != 1 => bail!("{} mode evaluates exactly one tree", self.mode),
            _ => Ok(()),
        }
    }

    /// Decision nodes per tree.
    pub fn m(&self) -> usize {
        (1 << self.h) - 1
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub encrypt_ms: f64,
    pub query_build_ms: f64,
    pub server_cpu_ms: [f64; 2],
    pub server_wall_ms: [f64; 2],
    pub client_wall_ms: f64,
    pub reconstruct_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub scenario: BenchScenario,
    pub modulus_bits: u32,
    pub m: usize,
    pub k: usize,
    /// Multiplication gates per query, per server.
    pub muls: [u64; 2],
    pub expected_muls: u64,
    /// Gates per decision node once the per-leaf gates are taken out.
    pub per_node_muls: f64,
    pub correct: usize,
    pub rejected: usize,
    pub ciphertext_bytes: usize,
    pub model_blob_bytes: usize,
    pub cm_blob_bytes: usize,
    /// `trees·m·n` ciphertexts, the size of the map without framing.
    pub cm_nominal_bytes: usize,
    pub query_bytes: usize,
    pub response_bytes: [usize; 2],
    pub response_shares: [usize; 2],
    pub links: Vec<LinkStats>,
    pub timings: Timings,
}

impl BenchResult {
    pub fn s2s(&self) -> &LinkStats {
        self.links.iter().find(|l| l.link == Link::Server0Server1).expect("ledger reports every link")
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn build_model(sc: &BenchScenario, rng: &mut impl Rng) -> PlainModel {
    let shape = TreeShape { h: sc.h, n: sc.n, t: sc.t };
    match sc.mode {
        Mode::Gbdt => PlainModel::Gbdt(GbdtModel {
            trees: (0..sc.trees).map(|_| random_tree(shape, LABEL_BITS, 0.0, rng)).collect(),
            eta: rng.gen_range(1..1 << 8),
            t0: rng.gen_range(-(1 << 20)..1 << 20),
            frac_bits: 0,
        }),
        _ => PlainModel::random(shape, LABEL_BITS, rng),
    }
}

/// Encrypts a random model, uploads it and runs `trials` queries.
pub fn run_scenario(ks: &KeySet, sc: &BenchScenario) -> Result<BenchResult> {
    sc.validate()?;
    if ks.pk.params != sc.profile.params() {
        bail!("keys do not belong to the {} profile", sc.profile);
    }
    let mb = ks.pk.params.modulus_bits;
    let n = &ks.pk.n;
    let mut rng = seeded_rng(Some(sc.seed));
    let plain = build_model(sc, &mut rng);

    let start = Instant::now();
    let model = plain.encrypt(&ks.pk, &mut rng)?;
    let encrypt_ms = ms(start.elapsed());
    let blob = encode_model(&model, mb)?;
    let cm_blob = encode_feature_maps(&model, mb)?;
    let expected = expected_muls(&model, sc.mode);

    let ledger = Arc::new(LinkLedger::new());
    let net = loopback(ks, ledger.clone());
    let (model_blob_bytes, cm_blob_bytes) = (blob.len(), cm_blob.len());
    let id = upload_model(&net, blob).context("upload")?;
    net.set_client_rtt(Duration::from_millis(sc.rtt_ms));

    let mut build = Vec::new();
    let mut cpu = [Vec::new(), Vec::new()];
    let mut wall = [Vec::new(), Vec::new()];
    let mut client_wall = Vec::new();
    let mut recon = Vec::new();
    let (mut correct, mut rejected) = (0, 0);
    let mut muls = [0u64; 2];
    let (mut query_bytes, mut response_bytes, mut response_shares) = (0, [0; 2], [0; 2]);
    let maps = model.feature_maps();
    for trial in 0..sc.trials {
        let x = random_features(sc.n, sc.t, &mut rng);
        let start = Instant::now();
        let (q, secret) = client_build_query(&ks.pk, &maps, &x, sc.t, sc.mode, &mut rng)?;
        build.push(ms(start.elapsed()));
        let out = submit_query(&net, id, trial as u64, &q, mb)?;
        client_wall.push(ms(out.wall));
        let start = Instant::now();
        let answer = check_answer(&out.responses[0], &out.responses[1], &secret, n);
        recon.push(ms(start.elapsed()));
        match answer {
            Ok(v) if v == plain.expected(&x, ks.pk.params.payload_bits())? => correct += 1,
            Ok(_) => {}
            Err(_) => rejected += 1,
        }
        for s in 0..2 {
            cpu[s].push(out.stats[s].cpu_ns as f64 / 1e6);
            wall[s].push(out.stats[s].wall_ns as f64 / 1e6);
            muls[s] = out.stats[s].muls;
            response_shares[s] = out.responses[s].share_count();
        }
        query_bytes = out.request_bytes;
        response_bytes = out.response_bytes;
    }
    let k = model.trees[0].k();
    let per_leaf = match sc.mode {
        Mode::Plain => 1,
        Mode::Verifiable => 2,
        Mode::Gbdt => 3,
    };
    let leaf_gates = per_leaf * (k * sc.trees) as u64 + if sc.mode == Mode::Gbdt { 2 } else { 0 };
    Ok(BenchResult {
        scenario: sc.clone(),
        modulus_bits: mb,
        m: sc.m(),
        k,
        muls,
        expected_muls: expected,
        per_node_muls: muls[0].saturating_sub(leaf_gates) as f64 / (sc.m() * sc.trees) as f64,
        correct,
        rejected,
        ciphertext_bytes: ks.pk.params.ciphertext_bytes(),
        model_blob_bytes,
        cm_blob_bytes,
        cm_nominal_bytes: sc.trees * sc.m() * sc.n * ks.pk.params.ciphertext_bytes(),
        query_bytes,
        response_bytes,
        response_shares,
        links: ledger.report().links,
        timings: Timings {
            encrypt_ms,
            query_build_ms: median(&build),
            server_cpu_ms: [median(&cpu[0]), median(&cpu[1])],
            server_wall_ms: [median(&wall[0]), median(&wall[1])],
            client_wall_ms: median(&client_wall),
            reconstruct_ms: median(&recon),
        },
    })
}

/// Plain-text table of a set of results.
pub fn render(results: &[BenchResult]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>3} {:>5} {:>6} {:>3} {:>10} {:>8} {:>9} {:>11} {:>11} {:>10} {:>8} {:>6} {:>9} {:>9} {:>7}",
        "h", "m", "k", "t", "mode", "muls", "mul/node", "cm blob", "query", "response", "shares", "s2s", "cpu ms", "wall ms", "ok"
    );
    for r in results {
        let s = &r.scenario;
        let _ = writeln!(
            out,
            "{:>3} {:>5} {:>6} {:>3} {:>10} {:>8} {:>9.2} {:>11} {:>11} {:>10} {:>8} {:>6} {:>9.1} {:>9.1} {:>7}",
            s.h,
            r.m,
            r.k,
            s.t,
            s.mode.to_string(),
            r.muls[0],
            r.per_node_muls,
            r.cm_blob_bytes,
            r.query_bytes,
            r.response_bytes[0],
            r.response_shares[0],
            r.s2s().messages,
            r.timings.server_cpu_ms[0],
            r.timings.client_wall_ms,
            format!("{}/{}", r.correct, s.trials),
        );
    }
    for r in results {
        let _ = writeln!(out, "\nh={} links (messages, bytes, injected rtt ms):", r.scenario.h);
        for l in &r.links {
            let _ = writeln!(out, "  {:<16} {:>6} {:>12} {:>8}", l.link.name(), l.messages, l.bytes, l.rtt_ms);
        }
        let t = &r.timings;
        let _ = writeln!(
            out,
            "  encrypt {:.1} ms, query build {:.1} ms, server cpu {:.1}/{:.1} ms, reconstruct {:.3} ms, cm blob {:.1} KB ({:.1} KB nominal)",
            t.encrypt_ms,
            t.query_build_ms,
            t.server_cpu_ms[0],
            t.server_cpu_ms[1],
            t.reconstruct_ms,
            r.cm_blob_bytes as f64 / 1024.0,
            r.cm_nominal_bytes as f64 / 1024.0,
        );
    }
    out
}

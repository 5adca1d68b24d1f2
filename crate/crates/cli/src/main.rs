use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use hsstree_cli::bench::{self, BenchScenario};
use hsstree_cli::keys;
use hsstree_cli::model::{descale, parse_features, PlainModel};
use hsstree_cli::report;
use hsstree_cli::seeded_rng;
use hsstree_cli::session::{check_answer, loopback, TamperSpec};
use hsstree_core::protocol::{client_build_query, Mode};
use hsstree_core::tree::{random_features, to_doc, TreeShape};
use hsstree_core::wire::{decode_feature_maps, encode_feature_maps, encode_model};
use hsstree_core::Profile;
use hsstree_net::{
    fetch_metrics, serve, submit_query, upload_model, LinkLedger, ModelId, ModelStore, Server, ServiceConfig,
    TcpTransport,
};

#[derive(Parser)]
#[command(name = "hsstree", version, about = "Two-server private and verifiable decision tree evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate pk, ek0, ek1 (and the escrow key for toy/test profiles).
    Keygen {
        #[arg(long, default_value = "test")]
        profile: Profile,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Use the built-in 3072-bit primes instead of searching (default profile only).
        #[arg(long)]
        fixture_primes: bool,
    },
    /// Encrypt a model; writes model.bin for the servers and features.bin for clients.
    EncryptModel {
        #[arg(long)]
        keys: PathBuf,
        #[command(flatten)]
        source: ModelSource,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        servers: Endpoints,
    },
    /// Run one evaluation server.
    Serve {
        #[arg(long)]
        role: u8,
        #[arg(long)]
        keys: PathBuf,
        /// Model store directory.
        #[arg(long)]
        store: PathBuf,
        #[arg(long, default_value = "127.0.0.1:7100")]
        listen: String,
    },
    /// Query a deployed model and verify the answer.
    Query {
        #[arg(long)]
        keys: PathBuf,
        /// features.bin downloaded from the provider.
        #[arg(long)]
        features: PathBuf,
        /// Hex model id, or a model.bin to hash.
        #[arg(long)]
        model_id: String,
        #[command(flatten)]
        input: FeatureInput,
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        servers: Endpoints,
    },
    /// One query against an in-process deployment, optionally with a corrupted share.
    VerifyRun {
        #[arg(long, default_value = "toy")]
        profile: Profile,
        /// Key directory; overrides --profile.
        #[arg(long)]
        keys: Option<PathBuf>,
        #[command(flatten)]
        source: ModelSource,
        #[command(flatten)]
        input: FeatureInput,
        #[arg(long)]
        mode: Option<Mode>,
        /// FIELD:TARGET with FIELD in v, w, pc and TARGET an index or "chosen".
        #[arg(long)]
        tamper: Option<TamperSpec>,
        /// Server whose response is corrupted.
        #[arg(long, default_value_t = 1)]
        tamper_server: u8,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Gate, byte and timing measurements over synthetic trees.
    Bench {
        #[arg(long, default_value = "test")]
        profile: Profile,
        #[arg(long = "h", value_delimiter = ',', default_value = "3,8,13")]
        heights: Vec<u32>,
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        t: u32,
        #[arg(long, default_value_t = 1)]
        trees: usize,
        #[arg(long, default_value = "verifiable")]
        mode: Mode,
        #[arg(long, default_value_t = 3)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        rtt_ms: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Write the results as JSON ("-" for stdout).
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Print link and query metrics from a JSON file or live servers.
    Report {
        #[arg(long)]
        metrics: Vec<PathBuf>,
        #[command(flatten)]
        servers: Endpoints,
    },
}

#[derive(Args)]
struct ModelSource {
    /// Tree or ensemble JSON document.
    #[arg(long, conflicts_with = "synthetic")]
    model: Option<PathBuf>,
    /// Random complete tree "h,n,t".
    #[arg(long, value_delimiter = ',')]
    synthetic: Option<Vec<u32>>,
    /// Pad a single tree to this height.
    #[arg(long)]
    height: Option<u32>,
}

#[derive(Args)]
struct FeatureInput {
    /// Comma-separated feature values; random when omitted (verify-run only).
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    /// One-based positions of categorical features.
    #[arg(long, value_delimiter = ',')]
    categorical: Vec<usize>,
    /// Values are already t-bit codes.
    #[arg(long)]
    encoded: bool,
}

#[derive(Args)]
struct Endpoints {
    #[arg(long)]
    server0: Option<String>,
    #[arg(long)]
    server1: Option<String>,
    /// Per-exchange timeout in seconds.
    #[arg(long, default_value_t = 600)]
    timeout_s: u64,
}

impl Endpoints {
    fn transport(&self) -> Result<Option<TcpTransport>> {
        match (&self.server0, &self.server1) {
            (Some(a), Some(b)) => Ok(Some(TcpTransport::new(a, b, Duration::from_secs(self.timeout_s)))),
            (None, None) => Ok(None),
            _ => bail!("give both --server0 and --server1"),
        }
    }
}

impl ModelSource {
    fn load(&self, seed: Option<u64>) -> Result<PlainModel> {
        match (&self.model, &self.synthetic) {
            (Some(path), _) => PlainModel::load(path, self.height),
            (None, Some(s)) => {
                if s.len() != 3 {
                    bail!("--synthetic takes h,n,t");
                }
                let shape = TreeShape { h: s[0], n: s[1] as usize, t: s[2] };
                if shape.h == 0 || shape.h > 20 || shape.n == 0 || shape.t == 0 || shape.t > 32 {
                    bail!("synthetic shape h={}, n={}, t={} out of range", shape.h, shape.n, shape.t);
                }
                Ok(PlainModel::random(shape, bench::LABEL_BITS, &mut seeded_rng(seed)))
            }
            (None, None) => bail!("give --model or --synthetic"),
        }
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("write {}", path.display()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Keygen { profile, out, seed, fixture_primes } => {
            let ks = keys::generate(profile, seed, fixture_primes)?;
            for path in keys::write_keys(&out, &ks, profile)? {
                println!("wrote {}", path.display());
            }
            Ok(0)
        }
        Command::EncryptModel { keys: dir, source, out, seed, servers } => {
            let pk = keys::read_public(&dir)?;
            let plain = source.load(seed)?;
            let model = plain.encrypt(&pk, &mut seeded_rng(seed))?;
            let mb = pk.params.modulus_bits;
            let blob = encode_model(&model, mb)?;
            let maps = encode_feature_maps(&model, mb)?;
            fs::create_dir_all(&out).with_context(|| format!("create {}", out.display()))?;
            write(&out.join("model.bin"), &blob)?;
            write(&out.join("features.bin"), &maps)?;
            if let PlainModel::Tree(tree) = &plain {
                if source.synthetic.is_some() {
                    let doc = serde_json::to_string_pretty(&to_doc(&tree.to_model()))?;
                    write(&out.join("tree.json"), doc.as_bytes())?;
                }
            }
            let id = ModelId::of(&blob);
            let nominal = model.trees.iter().map(|t| t.m() * t.n).sum::<usize>() * pk.params.ciphertext_bytes();
            println!("model-id {id}");
            println!("model.bin {} bytes", blob.len());
            println!(
                "features.bin {} bytes ({:.1} KB; {} map ciphertexts = {:.1} KB)",
                maps.len(),
                maps.len() as f64 / 1024.0,
                nominal / pk.params.ciphertext_bytes(),
                nominal as f64 / 1024.0
            );
            if let Some(net) = servers.transport()? {
                upload_model(&net, blob)?;
                println!("uploaded to both servers");
            }
            Ok(0)
        }
        Command::Serve { role, keys: dir, store, listen } => {
            let pk = Arc::new(keys::read_public(&dir)?);
            let ek = keys::read_eval(&dir, role)?;
            let store = Arc::new(ModelStore::open(&store)?);
            let server = Arc::new(Server::new(pk, ek, store, Arc::new(LinkLedger::new())));
            let handle = serve(server, &ServiceConfig::new(listen))?;
            println!("server{role} listening on {}", handle.addr());
            handle.wait();
            Ok(0)
        }
        Command::Query { keys: dir, features, model_id, input, mode, seed, servers } => {
            let pk = keys::read_public(&dir)?;
            let fm = decode_feature_maps(&fs::read(&features).with_context(|| format!("read {}", features.display()))?)?;
            if fm.modulus_bits != pk.params.modulus_bits {
                bail!("features.bin is for a {}-bit modulus, keys are {}-bit", fm.modulus_bits, pk.params.modulus_bits);
            }
            let id = if Path::new(&model_id).is_file() {
                ModelId::of(&fs::read(&model_id)?)
            } else {
                model_id.parse().with_context(|| format!("model id {model_id:?}"))?
            };
            let mode = mode.unwrap_or(if fm.gbdt { Mode::Gbdt } else { Mode::Verifiable });
            let text = input.x.as_deref().context("give --x")?;
            let x = parse_features(text, fm.n(), fm.t(), fm.frac_bits, &input.categorical, input.encoded)?;
            let net = servers.transport()?.context("give --server0 and --server1")?;
            let mut rng = seeded_rng(seed);
            let (q, secret) = client_build_query(&pk, &fm.maps(), &x, fm.t(), mode, &mut rng)?;
            let out = submit_query(&net, id, rand::random(), &q, pk.params.modulus_bits)?;
            println!("muls per server: {} / {}", out.stats[0].muls, out.stats[1].muls);
            println!("request {} bytes, responses {} / {} bytes", out.request_bytes, out.response_bytes[0], out.response_bytes[1]);
            match check_answer(&out.responses[0], &out.responses[1], &secret, &pk.n) {
                Ok(v) => {
                    println!("label {} (fixed point {v})", descale(&v, mode, fm.frac_bits));
                    println!("verdict: {}", if mode == Mode::Plain { "accepted (unverified)" } else { "verified" });
                    Ok(0)
                }
                Err(r) => {
                    println!("verdict: rejected, {r}");
                    Ok(r.code())
                }
            }
        }
        Command::VerifyRun { profile, keys: dir, source, input, mode, tamper, tamper_server, seed } => {
            let ks = match &dir {
                Some(d) => keys::read_keyset(d)?,
                None => keys::generate(profile, Some(seed), profile == Profile::Default)?,
            };
            let mut rng = seeded_rng(Some(seed));
            let src = if source.model.is_none() && source.synthetic.is_none() {
                ModelSource { model: None, synthetic: Some(vec![3, 4, 10]), height: None }
            } else {
                source
            };
            let plain = src.load(Some(seed))?;
            let mode = mode.unwrap_or(plain.default_mode());
            let model = plain.encrypt(&ks.pk, &mut rng)?;
            let mb = ks.pk.params.modulus_bits;
            let x = match &input.x {
                Some(text) => parse_features(text, plain.n(), plain.t(), model.frac_bits, &input.categorical, input.encoded)?,
                None => random_features(plain.n(), plain.t(), &mut rng),
            };
            let want = plain.expected(&x, ks.pk.params.payload_bits())?;
            let net = loopback(&ks, Arc::new(LinkLedger::new()));
            let id = upload_model(&net, encode_model(&model, mb)?)?;
            let (q, secret) = client_build_query(&ks.pk, &model.feature_maps(), &x, plain.t(), mode, &mut rng)?;
            let out = submit_query(&net, id, 1, &q, mb)?;
            let mut responses = out.responses.clone();
            if let Some(spec) = tamper {
                if tamper_server > 1 {
                    bail!("--tamper-server must be 0 or 1");
                }
                let honest = [&out.responses[0], &out.responses[1]];
                let pos = spec.apply(&mut responses[tamper_server as usize], honest, &ks.pk.n, &mut rng)?;
                println!("tampered {:?} share at position {pos} of server {tamper_server}", spec.field);
            }
            println!("expected label {want}");
            println!("S2S messages: {}", net.ledger().s2s().messages);
            match check_answer(&responses[0], &responses[1], &secret, &ks.pk.n) {
                Ok(v) => {
                    println!("label {v}; {}", if v == want { "correct" } else { "WRONG (undetected)" });
                    Ok(0)
                }
                Err(r) => {
                    println!("rejected: {r} (exit {})", r.code());
                    Ok(r.code())
                }
            }
        }
        Command::Bench { profile, heights, n, t, trees, mode, trials, rtt_ms, seed, json } => {
            let ks = keys::generate(profile, Some(seed), profile == Profile::Default)?;
            let mut results = Vec::new();
            for h in heights {
                let sc = BenchScenario { profile, h, n, t, trees, mode, trials, rtt_ms, seed };
                eprintln!("running h={h} ...");
                results.push(bench::run_scenario(&ks, &sc)?);
            }
            print!("{}", bench::render(&results));
            if let Some(path) = json {
                let doc = serde_json::to_string_pretty(&results)?;
                if path.as_os_str() == "-" {
                    println!("{doc}");
                } else {
                    write(&path, doc.as_bytes())?;
                }
            }
            Ok(0)
        }
        Command::Report { metrics, servers } => {
            let mut docs = Vec::new();
            for path in &metrics {
                let text = fs::read_to_string(path).with_context(|| format!("read {}", path.display()))?;
                docs.push(serde_json::from_str(&text).with_context(|| format!("parse {}", path.display()))?);
            }
            if let Some(net) = servers.transport()? {
                for sigma in 0..2 {
                    docs.push(fetch_metrics(&net, sigma)?);
                }
            }
            if docs.is_empty() {
                bail!("give --metrics files or --server0/--server1");
            }
            print!("{}", report::render(&report::merge(&docs)));
            Ok(0)
        }
    }
}

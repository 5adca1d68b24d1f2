//! The evaluation service: frame handling and the TCP front end.
//!
//! A server's configuration names only its own listen address. There is no
//! peer endpoint, so no code path can open a server-to-server connection.

use std::io::BufReader;
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::panic::{self, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use hsstree_core::hss::paillier::{EvalKey, PaillierEvaluator, PublicKey};
use hsstree_core::hss::Evaluator;
use hsstree_core::protocol::server_evaluate;
use hsstree_core::wire::{decode_model, decode_query, encode_response};
use log::{debug, warn};

use crate::cputime::thread_cpu_time;
use crate::error::NetError;
use crate::frame::{Frame, MsgType, DEFAULT_MAX_PAYLOAD};
use crate::ledger::{LinkLedger, Party, QueryRecord};
use crate::message::{code, Message, ModelId, ServerStats, METRICS_REQUEST};
use crate::store::ModelStore;

/// One of the two evaluation servers.
pub struct Server {
    pk: Arc<PublicKey>,
    ek: EvalKey,
    store: Arc<ModelStore>,
    ledger: Arc<LinkLedger>,
    max_payload: u64,
}

impl Server {
    pub fn new(pk: Arc<PublicKey>, ek: EvalKey, store: Arc<ModelStore>, ledger: Arc<LinkLedger>) -> Self {
        Self { pk, ek, store, ledger, max_payload: DEFAULT_MAX_PAYLOAD }
    }

    pub fn with_max_payload(mut self, max: u64) -> Self {
        self.max_payload = max;
        self
    }

    pub fn sigma(&self) -> u8 {
        self.ek.sigma
    }

    pub fn party(&self) -> Party {
        Party::server(self.ek.sigma)
    }

    pub fn ledger(&self) -> &Arc<LinkLedger> {
        &self.ledger
    }

    pub fn store(&self) -> &Arc<ModelStore> {
        &self.store
    }

    pub fn max_payload(&self) -> u64 {
        self.max_payload
    }

    /// Raw bytes in, raw bytes out; malformed input yields an Error frame.
    pub fn handle_bytes(&self, request: &[u8]) -> Vec<u8> {
        match Frame::from_bytes(request, self.max_payload) {
            Ok(frame) => self.handle(&frame),
            Err(e) => Message::error(0, code::MALFORMED_FRAME, e.to_string()).to_frame(),
        }
        .to_bytes()
    }

    /// Answers one frame with exactly one frame.
    pub fn handle(&self, frame: &Frame) -> Frame {
        let reply = match panic::catch_unwind(AssertUnwindSafe(|| self.dispatch(frame))) {
            Ok(m) => m,
            Err(_) => Message::error(0, code::INTERNAL, "request handler panicked"),
        };
        reply.to_frame()
    }

    fn dispatch(&self, frame: &Frame) -> Message {
        let msg = match Message::from_frame(frame) {
            Ok(m) => m,
            Err(e) => return Message::error(0, code::MALFORMED_FRAME, e.to_string()),
        };
        match msg {
            Message::ModelUpload { model_id, model } => self.upload(model_id, model),
            Message::Query { model_id, query_id, query } => {
                let request_bytes = frame.payload.len() as u64;
                self.query(model_id, query_id, &query, request_bytes)
                    .unwrap_or_else(|(c, detail)| Message::error(query_id, c, detail))
            }
            Message::Ping { payload } if payload == METRICS_REQUEST => {
                Message::Ping { payload: self.ledger.report().to_json().into_bytes() }
            }
            Message::Ping { payload } => Message::Ping { payload },
            Message::Response { query_id, .. } | Message::Error { query_id, .. } => {
                Message::error(query_id, code::UNEXPECTED_MESSAGE, "servers only accept uploads, queries and pings")
            }
        }
    }

    fn upload(&self, model_id: ModelId, model: Vec<u8>) -> Message {
        if ModelId::of(&model) != model_id {
            return Message::error(0, code::MODEL_REJECTED, "model id is not the SHA-256 of the model");
        }
        match decode_model(&model) {
            Ok((_, mb)) if mb != self.pk.params.modulus_bits => {
                return Message::error(0, code::MODEL_REJECTED, "model encrypted under another modulus size")
            }
            Ok(_) => {}
            Err(e) => return Message::error(0, code::MODEL_REJECTED, e.to_string()),
        }
        match self.store.put_model(model) {
            Ok(stored) => Message::Ping { payload: stored.id.0.to_vec() },
            Err(e) => Message::error(0, code::MODEL_REJECTED, e.to_string()),
        }
    }

    fn query(&self, model_id: ModelId, query_id: u64, query: &[u8], request_bytes: u64) -> Result<Message, (u16, String)> {
        let stored = match self.store.get_model(&model_id) {
            Ok(Some(m)) => m,
            Ok(None) => return Err((code::UNKNOWN_MODEL, format!("no model {model_id}"))),
            Err(e) => return Err((code::INTERNAL, e.to_string())),
        };
        let mb = self.pk.params.modulus_bits;
        if stored.shape.modulus_bits != mb {
            return Err((code::PROTOCOL, "stored model does not match this server's key".into()));
        }
        let (q, qmb) = decode_query(query).map_err(|e| (code::MALFORMED_QUERY, e.to_string()))?;
        if qmb != mb {
            return Err((code::MALFORMED_QUERY, format!("query encoded for {qmb}-bit modulus, key is {mb}-bit")));
        }
        let cts = q.cmx.iter().flatten().flat_map(|v| v.bits.iter()).chain(q.c_a.iter());
        for c in cts {
            self.pk.check_ciphertext(c).map_err(|e| (code::MALFORMED_QUERY, e.to_string()))?;
        }
        let ev = PaillierEvaluator::new(self.pk.clone(), self.ek.clone());
        let (wall0, cpu0) = (Instant::now(), thread_cpu_time());
        let resp = server_evaluate(&ev, &stored.model, &q).map_err(|e| (code::PROTOCOL, e.to_string()))?;
        let stats = ServerStats {
            muls: ev.gates().muls(),
            cpu_ns: thread_cpu_time().saturating_sub(cpu0).as_nanos() as u64,
            wall_ns: wall0.elapsed().as_nanos() as u64,
        };
        let response = encode_response(&resp, mb).map_err(|e| (code::INTERNAL, e.to_string()))?;
        self.ledger.record_query(QueryRecord {
            server: self.sigma(),
            query_id,
            model_id: model_id.to_string(),
            mode: q.mode.to_string(),
            muls: stats.muls,
            cpu_ms: stats.cpu_ns as f64 / 1e6,
            wall_ms: stats.wall_ns as f64 / 1e6,
            request_bytes,
            response_bytes: response.len() as u64,
            shares: resp.share_count() as u64,
        });
        Ok(Message::Response { query_id, stats, response })
    }
}

/// TCP service settings.
#[derive(Clone, Debug)]
pub struct ServiceConfig {
    pub listen: String,
    /// Idle read timeout per connection.
    pub io_timeout: Option<Duration>,
}

impl ServiceConfig {
    pub fn new(listen: impl Into<String>) -> Self {
        Self { listen: listen.into(), io_timeout: Some(Duration::from_secs(300)) }
    }
}

/// A running service. Dropping it stops the listener and closes open
/// connections.
pub struct ServiceHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    conns: Arc<Mutex<Vec<TcpStream>>>,
    thread: Option<JoinHandle<()>>,
}

impl ServiceHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn shutdown(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        for c in self.conns.lock().expect("conn lock").drain(..) {
            let _ = c.shutdown(std::net::Shutdown::Both);
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }

    /// Blocks until the service stops.
    pub fn wait(mut self) {
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for ServiceHandle {
    fn drop(&mut self) {
        self.shutdown();
    }
}

/// Starts listening; one thread per connection.
pub fn serve(server: Arc<Server>, config: &ServiceConfig) -> Result<ServiceHandle, NetError> {
    let addr = config
        .listen
        .to_socket_addrs()?
        .next()
        .ok_or_else(|| NetError::Store(format!("cannot resolve {}", config.listen)))?;
    let listener = TcpListener::bind(addr)?;
    listener.set_nonblocking(true)?;
    let addr = listener.local_addr()?;
    let stop = Arc::new(AtomicBool::new(false));
    let conns = Arc::new(Mutex::new(Vec::new()));
    let io_timeout = config.io_timeout;
    let thread = {
        let (stop, conns) = (stop.clone(), conns.clone());
        thread::Builder::new().name(format!("hsstree-server{}", server.sigma())).spawn(move || {
            while !stop.load(Ordering::SeqCst) {
                match listener.accept() {
                    Ok((stream, peer)) => {
                        debug!("server{} accepted {peer}", server.sigma());
                        if let Ok(c) = stream.try_clone() {
                            let mut list = conns.lock().expect("conn lock");
                            list.retain(|s: &TcpStream| s.peer_addr().is_ok());
                            list.push(c);
                        }
                        let server = server.clone();
                        thread::spawn(move || {
                            if let Err(e) = connection(&server, stream, io_timeout) {
                                warn!("server{} connection from {peer}: {e}", server.sigma());
                            }
                        });
                    }
                    Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                        thread::sleep(Duration::from_millis(5));
                    }
                    Err(e) => warn!("accept: {e}"),
                }
            }
        })?
    };
    Ok(ServiceHandle { addr, stop, conns, thread: Some(thread) })
}

fn connection(server: &Server, stream: TcpStream, io_timeout: Option<Duration>) -> Result<(), NetError> {
    stream.set_nonblocking(false)?;
    stream.set_read_timeout(io_timeout)?;
    stream.set_nodelay(true)?;
    let mut writer = stream.try_clone()?;
    let mut reader = BufReader::new(stream);
    let me = server.party();
    loop {
        let frame = match Frame::read_from(&mut reader, server.max_payload()) {
            Ok(Some(f)) => f,
            Ok(None) => return Ok(()),
            Err(NetError::Io(e)) => return Err(NetError::Io(e)),
            Err(e) => {
                // The stream can no longer be resynchronized.
                let reply = Message::error(0, code::MALFORMED_FRAME, e.to_string()).to_frame();
                let _ = reply.write_to(&mut writer);
                return Err(e);
            }
        };
        let peer = if frame.msg_type == MsgType::ModelUpload { Party::Provider } else { Party::Client };
        server.ledger().record(peer, me, frame.encoded_len());
        let reply = server.handle(&frame);
        server.ledger().record(me, peer, reply.encoded_len());
        reply.write_to(&mut writer)?;
    }
}

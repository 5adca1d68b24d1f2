//! Client and provider side: transports and the request flows.

use std::net::{TcpStream, ToSocketAddrs};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use hsstree_core::hss::paillier::Ciphertext;
use hsstree_core::protocol::{ClientQuery, ServerResponse};
use hsstree_core::wire::{decode_response, encode_query};

use crate::error::NetError;
use crate::frame::{Frame, DEFAULT_MAX_PAYLOAD};
use crate::ledger::{Link, LinkLedger, Metrics, Party};
use crate::message::{Message, ModelId, ServerStats, METRICS_REQUEST};

/// One request/response exchange with server `sigma`.
pub trait Transport: Send + Sync {
    fn exchange(&self, from: Party, sigma: u8, request: &Frame) -> Result<Frame, NetError>;
}

/// Plain TCP, one connection per exchange.
pub struct TcpTransport {
    addrs: [String; 2],
    timeout: Duration,
    ledger: Arc<LinkLedger>,
}

impl TcpTransport {
    pub fn new(server0: impl Into<String>, server1: impl Into<String>, timeout: Duration) -> Self {
        Self { addrs: [server0.into(), server1.into()], timeout, ledger: Arc::new(LinkLedger::new()) }
    }

    pub fn ledger(&self) -> &Arc<LinkLedger> {
        &self.ledger
    }
}

impl Transport for TcpTransport {
    fn exchange(&self, from: Party, sigma: u8, request: &Frame) -> Result<Frame, NetError> {
        let to = Party::server(sigma);
        let link = Link::between(from, to).expect("client and provider reach both servers");
        let fail = |reason: String| NetError::Link { link, reason };
        let addr = &self.addrs[sigma as usize];
        let sock = addr
            .to_socket_addrs()
            .map_err(|e| fail(format!("resolve {addr}: {e}")))?
            .next()
            .ok_or_else(|| fail(format!("resolve {addr}: no address")))?;
        let mut stream =
            TcpStream::connect_timeout(&sock, self.timeout).map_err(|e| fail(format!("connect {addr}: {e}")))?;
        stream.set_read_timeout(Some(self.timeout))?;
        stream.set_write_timeout(Some(self.timeout))?;
        stream.set_nodelay(true)?;
        request.write_to(&mut stream).map_err(|e| fail(format!("send to {addr}: {e}")))?;
        self.ledger.record(from, to, request.encoded_len());
        let reply = match Frame::read_from(&mut stream, DEFAULT_MAX_PAYLOAD) {
            Ok(Some(f)) => f,
            Ok(None) => return Err(fail(format!("{addr} closed the connection"))),
            Err(NetError::Io(e)) if matches!(e.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut) => {
                return Err(fail(format!("no reply from {addr} within {:?}", self.timeout)))
            }
            Err(NetError::Io(e)) => return Err(fail(format!("receive from {addr}: {e}"))),
            Err(e) => return Err(e),
        };
        self.ledger.record(to, from, reply.encoded_len());
        Ok(reply)
    }
}

/// Both responses of one query, plus what the servers reported.
#[derive(Clone, Debug)]
pub struct QueryOutcome {
    pub responses: [ServerResponse; 2],
    pub stats: [ServerStats; 2],
    /// Client-side wall time from sending to holding both responses.
    pub wall: Duration,
    pub request_bytes: usize,
    pub response_bytes: [usize; 2],
}

fn server_error(sigma: u8, reply: Message) -> NetError {
    match reply {
        Message::Error { code, detail, .. } => NetError::Server { sigma, code, detail },
        other => NetError::Unexpected(format!("server {sigma} sent {:?}", other.msg_type())),
    }
}

/// Sends the query to both servers in parallel and decodes both answers.
pub fn submit_query(
    transport: &dyn Transport,
    model_id: ModelId,
    query_id: u64,
    query: &ClientQuery<Ciphertext>,
    modulus_bits: u32,
) -> Result<QueryOutcome, NetError> {
    let frame = Message::Query { model_id, query_id, query: encode_query(query, modulus_bits)? }.to_frame();
    let request = &frame;
    let start = Instant::now();
    let replies: Vec<Result<Frame, NetError>> = thread::scope(|s| {
        let handles: Vec<_> =
            (0..2u8).map(|sigma| s.spawn(move || transport.exchange(Party::Client, sigma, request))).collect();
        handles.into_iter().map(|h| h.join().expect("exchange thread")).collect()
    });
    let wall = start.elapsed();
    let mut responses = Vec::with_capacity(2);
    let mut stats = [ServerStats::default(); 2];
    let mut response_bytes = [0usize; 2];
    for (sigma, reply) in replies.into_iter().enumerate() {
        let sigma = sigma as u8;
        let reply = reply?;
        response_bytes[sigma as usize] = reply.encoded_len();
        match Message::from_frame(&reply)? {
            Message::Response { query_id: id, stats: st, response } if id == query_id => {
                let (resp, mb) = decode_response(&response)?;
                if resp.sigma != sigma || mb != modulus_bits {
                    return Err(NetError::Unexpected(format!("server {sigma} answered as {} at {mb} bits", resp.sigma)));
                }
                stats[sigma as usize] = st;
                responses.push(resp);
            }
            Message::Response { query_id: id, .. } => {
                return Err(NetError::Unexpected(format!("server {sigma} answered query {id}, not {query_id}")))
            }
            other => return Err(server_error(sigma, other)),
        }
    }
    let r1 = responses.pop().expect("two responses");
    let r0 = responses.pop().expect("two responses");
    Ok(QueryOutcome { responses: [r0, r1], stats, wall, request_bytes: frame.encoded_len(), response_bytes })
}

/// Provider upload of a serialized model to both servers.
pub fn upload_model(transport: &dyn Transport, model: Vec<u8>) -> Result<ModelId, NetError> {
    let model_id = ModelId::of(&model);
    let frame = Message::ModelUpload { model_id, model }.to_frame();
    for sigma in 0..2u8 {
        match Message::from_frame(&transport.exchange(Party::Provider, sigma, &frame)?)? {
            Message::Ping { payload } if payload == model_id.0 => {}
            other => return Err(server_error(sigma, other)),
        }
    }
    Ok(model_id)
}

/// The metrics document of one server.
pub fn fetch_metrics(transport: &dyn Transport, sigma: u8) -> Result<Metrics, NetError> {
    let frame = Message::Ping { payload: METRICS_REQUEST.to_vec() }.to_frame();
    match Message::from_frame(&transport.exchange(Party::Client, sigma, &frame)?)? {
        Message::Ping { payload } => {
            serde_json::from_slice(&payload).map_err(|e| NetError::Unexpected(format!("metrics: {e}")))
        }
        other => Err(server_error(sigma, other)),
    }
}

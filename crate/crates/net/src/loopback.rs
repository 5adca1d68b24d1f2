//! In-process network with per-link latency injection.

use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use crate::client::Transport;
use crate::error::NetError;
use crate::frame::Frame;
use crate::ledger::{Link, LinkLedger, Party};
use crate::server::Server;

/// Both servers behind one shared ledger. Every exchange is serialized to
/// bytes and parsed again, so byte counts match the TCP path.
pub struct Loopback {
    servers: [Arc<Server>; 2],
    ledger: Arc<LinkLedger>,
    rtt: Mutex<[Duration; 4]>,
}

impl Loopback {
    /// The servers must share `ledger`'s view; sigma 0 first.
    pub fn new(server0: Arc<Server>, server1: Arc<Server>) -> Self {
        assert_eq!((server0.sigma(), server1.sigma()), (0, 1), "loopback wants server0 then server1");
        let ledger = server0.ledger().clone();
        Self { servers: [server0, server1], ledger, rtt: Mutex::new([Duration::ZERO; 4]) }
    }

    pub fn ledger(&self) -> &Arc<LinkLedger> {
        &self.ledger
    }

    pub fn server(&self, sigma: u8) -> &Arc<Server> {
        &self.servers[sigma as usize]
    }

    /// Round-trip time injected on every exchange over `link`.
    pub fn set_rtt(&self, link: Link, rtt: Duration) {
        let i = Link::ALL.iter().position(|&l| l == link).expect("known link");
        self.rtt.lock().expect("rtt lock")[i] = rtt;
    }

    pub fn set_client_rtt(&self, rtt: Duration) {
        self.set_rtt(Link::ClientServer0, rtt);
        self.set_rtt(Link::ClientServer1, rtt);
    }

    fn rtt(&self, link: Link) -> Duration {
        let i = Link::ALL.iter().position(|&l| l == link).expect("known link");
        self.rtt.lock().expect("rtt lock")[i]
    }
}

impl Transport for Loopback {
    fn exchange(&self, from: Party, sigma: u8, request: &Frame) -> Result<Frame, NetError> {
        let server = &self.servers[sigma as usize];
        let to = server.party();
        let link = Link::between(from, to).expect("client and provider reach both servers");
        let rtt = self.rtt(link);
        let bytes = request.to_bytes();
        self.ledger.record(from, to, bytes.len());
        thread::sleep(rtt / 2);
        let reply = server.handle_bytes(&bytes);
        thread::sleep(rtt - rtt / 2);
        self.ledger.record(to, from, reply.len());
        self.ledger.add_rtt(link, rtt.as_millis() as u64);
        Frame::from_bytes(&reply, server.max_payload())
    }
}

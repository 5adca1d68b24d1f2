//! Per-link traffic accounting.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Party {
    Client,
    Provider,
    Server0,
    Server1,
}

impl Party {
    pub fn server(sigma: u8) -> Self {
        if sigma == 0 {
            Party::Server0
        } else {
            Party::Server1
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Link {
    ClientServer0,
    ClientServer1,
    ProviderServers,
    Server0Server1,
}

impl Link {
    pub const ALL: [Link; 4] = [Link::ClientServer0, Link::ClientServer1, Link::ProviderServers, Link::Server0Server1];

    /// The link two parties talk over; `None` for pairs the artifact never connects.
    pub fn between(a: Party, b: Party) -> Option<Link> {
        use Party::*;
        match (a, b) {
            (Client, Server0) | (Server0, Client) => Some(Link::ClientServer0),
            (Client, Server1) | (Server1, Client) => Some(Link::ClientServer1),
            (Provider, Server0 | Server1) | (Server0 | Server1, Provider) => Some(Link::ProviderServers),
            (Server0, Server1) | (Server1, Server0) => Some(Link::Server0Server1),
            _ => None,
        }
    }

    pub fn client_to(sigma: u8) -> Link {
        if sigma == 0 {
            Link::ClientServer0
        } else {
            Link::ClientServer1
        }
    }

    fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Link::ClientServer0 => "client-server0",
            Link::ClientServer1 => "client-server1",
            Link::ProviderServers => "provider-servers",
            Link::Server0Server1 => "server0-server1",
        }
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Default)]
struct Counters {
    messages: AtomicU64,
    bytes: AtomicU64,
    rtt_ms: AtomicU64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkStats {
    pub link: Link,
    pub messages: u64,
    pub bytes: u64,
    /// Simulated round-trip time accumulated on the link.
    pub rtt_ms: u64,
}

/// One evaluated query as seen by one server.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub server: u8,
    pub query_id: u64,
    pub model_id: String,
    pub mode: String,
    pub muls: u64,
    pub cpu_ms: f64,
    pub wall_ms: f64,
    pub request_bytes: u64,
    pub response_bytes: u64,
    /// Shares in the response.
    #[serde(default)]
    pub shares: u64,
}

/// The metrics document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub links: Vec<LinkStats>,
    pub queries: Vec<QueryRecord>,
}

impl Metrics {
    pub fn link(&self, link: Link) -> LinkStats {
        self.links
            .iter()
            .find(|l| l.link == link)
            .cloned()
            .unwrap_or(LinkStats { link, messages: 0, bytes: 0, rtt_ms: 0 })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }
}

#[derive(Default)]
pub struct LinkLedger {
    links: [Counters; 4],
    queries: Mutex<Vec<QueryRecord>>,
}

impl LinkLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records one message of `bytes` sent from `from` to `to`.
    pub fn record(&self, from: Party, to: Party, bytes: usize) {
        if let Some(link) = Link::between(from, to) {
            let c = &self.links[link.index()];
            c.messages.fetch_add(1, Ordering::Relaxed);
            c.bytes.fetch_add(bytes as u64, Ordering::Relaxed);
        }
    }

    pub fn add_rtt(&self, link: Link, ms: u64) {
        self.links[link.index()].rtt_ms.fetch_add(ms, Ordering::Relaxed);
    }

    pub fn record_query(&self, q: QueryRecord) {
        self.queries.lock().expect("ledger lock").push(q);
    }

    pub fn stats(&self, link: Link) -> LinkStats {
        let c = &self.links[link.index()];
        LinkStats {
            link,
            messages: c.messages.load(Ordering::Relaxed),
            bytes: c.bytes.load(Ordering::Relaxed),
            rtt_ms: c.rtt_ms.load(Ordering::Relaxed),
        }
    }

    /// Server-to-server traffic; zero in every run.
    pub fn s2s(&self) -> LinkStats {
        self.stats(Link::Server0Server1)
    }

    pub fn report(&self) -> Metrics {
        Metrics {
            links: Link::ALL.iter().map(|&l| self.stats(l)).collect(),
            queries: self.queries.lock().expect("ledger lock").clone(),
        }
    }

    pub fn reset(&self) {
        for c in &self.links {
            c.messages.store(0, Ordering::Relaxed);
            c.bytes.store(0, Ordering::Relaxed);
            c.rtt_ms.store(0, Ordering::Relaxed);
        }
        self.queries.lock().expect("ledger lock").clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn links_are_symmetric() {
        for a in [Party::Client, Party::Provider, Party::Server0, Party::Server1] {
            for b in [Party::Client, Party::Provider, Party::Server0, Party::Server1] {
                assert_eq!(Link::between(a, b), Link::between(b, a));
            }
        }
        assert_eq!(Link::between(Party::Client, Party::Provider), None);
    }

    #[test]
    fn counts_and_report() {
        let l = LinkLedger::new();
        l.record(Party::Client, Party::Server1, 100);
        l.record(Party::Server1, Party::Client, 40);
        l.add_rtt(Link::ClientServer1, 160);
        let m = l.report();
        assert_eq!(m.link(Link::ClientServer1), LinkStats { link: Link::ClientServer1, messages: 2, bytes: 140, rtt_ms: 160 });
        assert_eq!(m.link(Link::Server0Server1).messages, 0);
        let json = m.to_json();
        assert!(json.contains("\"server0-server1\""));
        let back: Metrics = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
    }
}

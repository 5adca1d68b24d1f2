//! Rendering of server metrics documents.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use hsstree_net::{Link, LinkStats, Metrics, QueryRecord};

use crate::median;

/// Merges the documents of both servers. Each server sees its own client
/// link and its half of the provider traffic.
pub fn merge(docs: &[Metrics]) -> Metrics {
    let links = Link::ALL
        .iter()
        .map(|&link| {
            let mut total = LinkStats { link, messages: 0, bytes: 0, rtt_ms: 0 };
            for d in docs {
                let s = d.link(link);
                total.messages += s.messages;
                total.bytes += s.bytes;
                total.rtt_ms += s.rtt_ms;
            }
            total
        })
        .collect();
    Metrics { links, queries: docs.iter().flat_map(|d| d.queries.iter().cloned()).collect() }
}

pub fn render(m: &Metrics) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<16} {:>9} {:>14} {:>8}", "link", "messages", "bytes", "rtt ms");
    for l in &m.links {
        let _ = writeln!(out, "{:<16} {:>9} {:>14} {:>8}", l.link.name(), l.messages, l.bytes, l.rtt_ms);
    }
    let s2s = m.link(Link::Server0Server1);
    let _ = writeln!(out, "S2S: {} messages, {} bytes", s2s.messages, s2s.bytes);

    let mut groups: BTreeMap<(u8, &str), Vec<_>> = BTreeMap::new();
    for q in &m.queries {
        groups.entry((q.server, q.mode.as_str())).or_default().push(q);
    }
    if groups.is_empty() {
        let _ = writeln!(out, "no queries");
        return out;
    }
    let _ = writeln!(
        out,
        "\n{:>6} {:>10} {:>7} {:>9} {:>8} {:>11} {:>12} {:>9} {:>9}",
        "server", "mode", "queries", "muls", "shares", "request B", "response B", "cpu ms", "wall ms"
    );
    for ((server, mode), qs) in &groups {
        let med = |f: &dyn Fn(&&QueryRecord) -> f64| median(&qs.iter().map(f).collect::<Vec<_>>());
        let _ = writeln!(
            out,
            "{:>6} {:>10} {:>7} {:>9} {:>8} {:>11} {:>12} {:>9.1} {:>9.1}",
            server,
            mode,
            qs.len(),
            med(&|q| q.muls as f64),
            med(&|q| q.shares as f64),
            med(&|q| q.request_bytes as f64),
            med(&|q| q.response_bytes as f64),
            med(&|q| q.cpu_ms),
            med(&|q| q.wall_ms),
        );
    }
    out
}

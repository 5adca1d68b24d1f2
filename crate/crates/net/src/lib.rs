//! Transport for the two-server deployment: frames, messages, a TCP service,
//! an in-process loopback network, persistence, and the per-link ledger
//! showing that the servers never talk to each other.

pub mod client;
pub mod cputime;
pub mod error;
pub mod frame;
pub mod ledger;
pub mod loopback;
pub mod message;
pub mod server;
pub mod store;

pub use client::{fetch_metrics, submit_query, upload_model, QueryOutcome, TcpTransport, Transport};
pub use error::NetError;
pub use frame::{Frame, MsgType};
pub use ledger::{Link, LinkLedger, LinkStats, Metrics, Party, QueryRecord};
pub use loopback::Loopback;
pub use message::{code, Message, ModelId, ServerStats};
pub use server::{serve, Server, ServiceConfig, ServiceHandle};
pub use store::{ModelShape, ModelStore, StoredModel};

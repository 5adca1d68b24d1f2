//! Message payloads carried inside frames.
//!
//! | type | payload |
//! |------|---------|
//! | `0x01` ModelUpload | model-id (32) · model blob |
//! | `0x02` Query | model-id (32) · query-id u64 · query blob |
//! | `0x03` Response | query-id u64 · muls u64 · cpu ns u64 · wall ns u64 · response blob |
//! | `0x04` Error | query-id u64 · code u16 · UTF-8 detail |
//! | `0x05` Ping | opaque bytes, echoed |
//!
//! A server acknowledges a ModelUpload with a Ping carrying the model id and
//! answers a Ping whose payload is `metrics` with its metrics JSON.

use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::NetError;
use crate::frame::{Frame, MsgType};

pub const METRICS_REQUEST: &[u8] = b"metrics";

/// SHA-256 of a serialized blob.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModelId(pub [u8; 32]);

impl ModelId {
    pub fn of(bytes: &[u8]) -> Self {
        Self(Sha256::digest(bytes).into())
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl fmt::Debug for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ModelId({})", &hex::encode(self.0)[..12])
    }
}

impl FromStr for ModelId {
    type Err = NetError;

    fn from_str(s: &str) -> Result<Self, NetError> {
        let bytes = hex::decode(s.trim()).map_err(|e| NetError::Message(format!("model id: {e}")))?;
        let arr: [u8; 32] =
            bytes.try_into().map_err(|_| NetError::Message("model id must be 32 bytes".into()))?;
        Ok(Self(arr))
    }
}

/// Error codes carried in Error frames.
pub mod code {
    pub const MALFORMED_FRAME: u16 = 1;
    pub const UNKNOWN_MODEL: u16 = 2;
    pub const MALFORMED_QUERY: u16 = 3;
    pub const PROTOCOL: u16 = 4;
    pub const UNEXPECTED_MESSAGE: u16 = 5;
    pub const INTERNAL: u16 = 6;
    pub const MODEL_REJECTED: u16 = 7;

    pub fn name(code: u16) -> &'static str {
        match code {
            MALFORMED_FRAME => "malformed-frame",
            UNKNOWN_MODEL => "unknown-model",
            MALFORMED_QUERY => "malformed-query",
            PROTOCOL => "protocol-error",
            UNEXPECTED_MESSAGE => "unexpected-message",
            INTERNAL => "internal",
            MODEL_REJECTED => "model-rejected",
            _ => "unknown",
        }
    }
}

/// Work a server reports alongside its response.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ServerStats {
    pub muls: u64,
    pub cpu_ns: u64,
    pub wall_ns: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Message {
    ModelUpload { model_id: ModelId, model: Vec<u8> },
    Query { model_id: ModelId, query_id: u64, query: Vec<u8> },
    Response { query_id: u64, stats: ServerStats, response: Vec<u8> },
    Error { query_id: u64, code: u16, detail: String },
    Ping { payload: Vec<u8> },
}

struct Cursor<'a> {
    buf: &'a [u8],
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], NetError> {
        if self.buf.len() < n {
            return Err(NetError::Message("truncated payload".into()));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn u64(&mut self) -> Result<u64, NetError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn id(&mut self) -> Result<ModelId, NetError> {
        Ok(ModelId(self.take(32)?.try_into().expect("32 bytes")))
    }

    fn rest_nonempty(self, what: &str) -> Result<Vec<u8>, NetError> {
        if self.buf.is_empty() {
            return Err(NetError::Message(format!("empty {what}")));
        }
        Ok(self.buf.to_vec())
    }
}

impl Message {
    pub fn msg_type(&self) -> MsgType {
        match self {
            Message::ModelUpload { .. } => MsgType::ModelUpload,
            Message::Query { .. } => MsgType::Query,
            Message::Response { .. } => MsgType::Response,
            Message::Error { .. } => MsgType::Error,
            Message::Ping { .. } => MsgType::Ping,
        }
    }

    pub fn to_frame(&self) -> Frame {
        let mut p = Vec::new();
        match self {
            Message::ModelUpload { model_id, model } => {
                p.extend_from_slice(&model_id.0);
                p.extend_from_slice(model);
            }
            Message::Query { model_id, query_id, query } => {
                p.extend_from_slice(&model_id.0);
                p.extend_from_slice(&query_id.to_be_bytes());
                p.extend_from_slice(query);
            }
            Message::Response { query_id, stats, response } => {
                for v in [*query_id, stats.muls, stats.cpu_ns, stats.wall_ns] {
                    p.extend_from_slice(&v.to_be_bytes());
                }
                p.extend_from_slice(response);
            }
            Message::Error { query_id, code, detail } => {
                p.extend_from_slice(&query_id.to_be_bytes());
                p.extend_from_slice(&code.to_be_bytes());
                p.extend_from_slice(detail.as_bytes());
            }
            Message::Ping { payload } => p.extend_from_slice(payload),
        }
        Frame::new(self.msg_type(), p)
    }

    pub fn from_frame(frame: &Frame) -> Result<Self, NetError> {
        let mut c = Cursor { buf: &frame.payload };
        Ok(match frame.msg_type {
            MsgType::ModelUpload => {
                let model_id = c.id()?;
                Message::ModelUpload { model_id, model: c.rest_nonempty("model")? }
            }
            MsgType::Query => {
                let model_id = c.id()?;
                let query_id = c.u64()?;
                Message::Query { model_id, query_id, query: c.rest_nonempty("query")? }
            }
            MsgType::Response => {
                let query_id = c.u64()?;
                let stats = ServerStats { muls: c.u64()?, cpu_ns: c.u64()?, wall_ns: c.u64()? };
                Message::Response { query_id, stats, response: c.rest_nonempty("response")? }
            }
            MsgType::Error => {
                let query_id = c.u64()?;
                let code = u16::from_be_bytes(c.take(2)?.try_into().expect("2 bytes"));
                let detail = String::from_utf8(c.buf.to_vec())
                    .map_err(|_| NetError::Message("error detail is not UTF-8".into()))?;
                Message::Error { query_id, code, detail }
            }
            MsgType::Ping => Message::Ping { payload: frame.payload.clone() },
        })
    }

    pub fn error(query_id: u64, code: u16, detail: impl Into<String>) -> Self {
        Message::Error { query_id, code, detail: detail.into() }
    }
}

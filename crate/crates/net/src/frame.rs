//! Length-prefixed frames.
//!
//! ```text
//! magic "HTNF" | version u8 | msg_type u8 | length u64 BE | payload
//! ```

use std::io::{self, Read, Write};

use crate::error::NetError;

pub const FRAME_MAGIC: [u8; 4] = *b"HTNF";
pub const FRAME_VERSION: u8 = 1;
pub const HEADER_LEN: usize = 14;
/// Payload bound applied when none is configured.
pub const DEFAULT_MAX_PAYLOAD: u64 = 1 << 31;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum MsgType {
    ModelUpload = 0x01,
    Query = 0x02,
    Response = 0x03,
    Error = 0x04,
    Ping = 0x05,
}

impl MsgType {
    pub fn from_u8(v: u8) -> Option<Self> {
        Some(match v {
            0x01 => MsgType::ModelUpload,
            0x02 => MsgType::Query,
            0x03 => MsgType::Response,
            0x04 => MsgType::Error,
            0x05 => MsgType::Ping,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub msg_type: MsgType,
    pub payload: Vec<u8>,
}

fn frame_err(msg: impl Into<String>) -> NetError {
    NetError::Frame(msg.into())
}

/// Parses and checks a header, returning the type and payload length.
pub fn parse_header(h: &[u8; HEADER_LEN], max_payload: u64) -> Result<(MsgType, u64), NetError> {
    if h[..4] != FRAME_MAGIC {
        return Err(frame_err("bad magic"));
    }
    if h[4] != FRAME_VERSION {
        return Err(frame_err(format!("unsupported version {}", h[4])));
    }
    let msg_type = MsgType::from_u8(h[5]).ok_or_else(|| frame_err(format!("unknown msg_type {:#04x}", h[5])))?;
    let len = u64::from_be_bytes(h[6..14].try_into().expect("8 bytes"));
    if len > max_payload {
        return Err(frame_err(format!("length {len} exceeds limit {max_payload}")));
    }
    Ok((msg_type, len))
}

impl Frame {
    pub fn new(msg_type: MsgType, payload: Vec<u8>) -> Self {
        Self { msg_type, payload }
    }

    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + self.payload.len()
    }

    pub fn header(&self) -> [u8; HEADER_LEN] {
        let mut h = [0u8; HEADER_LEN];
        h[..4].copy_from_slice(&FRAME_MAGIC);
        h[4] = FRAME_VERSION;
        h[5] = self.msg_type as u8;
        h[6..].copy_from_slice(&(self.payload.len() as u64).to_be_bytes());
        h
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(&self.header());
        out.extend_from_slice(&self.payload);
        out
    }

    /// Decodes exactly one frame occupying all of `bytes`.
    pub fn from_bytes(bytes: &[u8], max_payload: u64) -> Result<Self, NetError> {
        let header: &[u8; HEADER_LEN] = bytes
            .get(..HEADER_LEN)
            .and_then(|h| h.try_into().ok())
            .ok_or_else(|| frame_err("truncated header"))?;
        let (msg_type, len) = parse_header(header, max_payload)?;
        let body = &bytes[HEADER_LEN..];
        if body.len() as u64 != len {
            return Err(frame_err(format!("length field {len} but {} payload bytes", body.len())));
        }
        Ok(Self { msg_type, payload: body.to_vec() })
    }

    /// Reads one frame. `Ok(None)` on a clean end of stream before the header.
    pub fn read_from<R: Read>(r: &mut R, max_payload: u64) -> Result<Option<Self>, NetError> {
        let mut header = [0u8; HEADER_LEN];
        let mut got = 0;
        while got < HEADER_LEN {
            match r.read(&mut header[got..]) {
                Ok(0) if got == 0 => return Ok(None),
                Ok(0) => return Err(frame_err("truncated header")),
                Ok(k) => got += k,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) => return Err(NetError::Io(e)),
            }
        }
        let (msg_type, len) = parse_header(&header, max_payload)?;
        let mut payload = Vec::with_capacity(len.min(1 << 20) as usize);
        r.take(len).read_to_end(&mut payload)?;
        if payload.len() as u64 != len {
            return Err(frame_err("truncated payload"));
        }
        Ok(Some(Self { msg_type, payload }))
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> io::Result<()> {
        w.write_all(&self.header())?;
        w.write_all(&self.payload)?;
        w.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_header_layout() {
        let f = Frame::new(MsgType::Query, vec![1, 2, 3]);
        let b = f.to_bytes();
        assert_eq!(&b[..6], b"HTNF\x01\x02");
        assert_eq!(&b[6..14], &3u64.to_be_bytes());
        assert_eq!(Frame::from_bytes(&b, 16).unwrap(), f);
        assert_eq!(Frame::read_from(&mut &b[..], 16).unwrap(), Some(f));
    }

    #[test]
    fn rejects_bad_headers() {
        let b = Frame::new(MsgType::Ping, vec![0; 8]).to_bytes();
        let mut t = b.clone();
        t[5] = 0x06;
        assert!(Frame::from_bytes(&t, 64).is_err());
        let mut v = b.clone();
        v[4] = 2;
        assert!(Frame::from_bytes(&v, 64).is_err());
        assert!(Frame::from_bytes(&b, 4).is_err());
        assert!(Frame::from_bytes(&b[..b.len() - 1], 64).is_err());
        assert!(Frame::read_from(&mut &b[..b.len() - 1], 64).is_err());
        assert!(Frame::read_from(&mut &b[..3], 64).is_err());
        assert_eq!(Frame::read_from(&mut &b[..0], 64).unwrap(), None);
    }
}

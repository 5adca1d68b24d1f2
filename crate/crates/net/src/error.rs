use std::io;

use hsstree_core::HssError;
use thiserror::Error;

use crate::ledger::Link;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("malformed frame: {0}")]
    Frame(String),
    #[error("malformed message: {0}")]
    Message(String),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("link {link} failed: {reason}")]
    Link { link: Link, reason: String },
    #[error("server {sigma} answered with error {code}: {detail}")]
    Server { sigma: u8, code: u16, detail: String },
    #[error("unexpected reply: {0}")]
    Unexpected(String),
    #[error("store: {0}")]
    Store(String),
    #[error(transparent)]
    Core(#[from] HssError),
}

impl NetError {
    /// The failing link, for timeouts and refused connections.
    pub fn link(&self) -> Option<Link> {
        match self {
            NetError::Link { link, .. } => Some(*link),
            _ => None,
        }
    }
}

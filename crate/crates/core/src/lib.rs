//! Two-server, zero-interaction private and verifiable decision tree
//! evaluation on top of homomorphic secret sharing.
//!
//! * [`hss`]: Paillier-ElGamal HSS for RMS programs plus a cleartext oracle.
//! * [`compare`]: bitwise greater-than, equality and set membership.
//! * [`tree`]: plaintext trees, ensembles, padding and evaluation oracles.
//! * [`protocol`]: provider encryption, client query, server evaluation and
//!   verifiable reconstruction.
//! * [`wire`]: canonical binary encodings of keys and protocol payloads.

pub mod compare;
pub mod error;
pub mod hss;
pub mod params;
pub mod protocol;
pub mod tree;
pub mod wire;

pub use error::{HssError, Result};
pub use params::{HssParams, Profile};

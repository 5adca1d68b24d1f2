//! The four protocol phases.
//!
//! * provider: [`encrypt_tree_model`] / [`encrypt_gbdt_model`] produce an
//!   [`EncryptedModel`] (bitwise thresholds or set elements, labels and the
//!   one-hot feature map).
//! * client: [`client_build_query`] runs feature selection over the
//!   encrypted map and, in the verifiable modes, encrypts a one-time MAC key.
//! * servers: [`server_evaluate`] compares at every node, turns outcomes
//!   into masked path costs and labels, and answers with one response.
//! * client: [`reconstruct`], [`verify`] and [`reconstruct_gbdt`].
//!
//! Both servers derive masks and the leaf permutation from the shared PRF
//! key and the query nonce, so they never talk to each other.

mod client;
mod masks;
mod model;
mod server;

pub use client::{chosen_position, reconstruct, reconstruct_gbdt, verify, Reject};
pub use masks::{derive_mask_plan, GbdtMasks, MaskPlan, TreeMasks};
pub use model::{
    client_build_query, encrypt_gbdt_model, encrypt_tree, encrypt_tree_model, sfs, ClientQuery,
    EncryptedModel, EncryptedTest, EncryptedTree, GbdtCiphertexts, QuerySecret,
};
pub use server::{
    expected_muls, node_outcomes, server_evaluate, server_evaluate_with_plan, LeafShare,
    ServerResponse,
};

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::HssError;

/// Result generation variant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Path costs and labels only.
    Plain,
    /// Adds a MAC share `w = A·v` per leaf.
    Verifiable,
    /// Ensemble: per-tree `η·v` and its MAC, plus `T₀`.
    Gbdt,
}

impl Mode {
    pub fn tag(self) -> u8 {
        match self {
            Mode::Plain => 0,
            Mode::Verifiable => 1,
            Mode::Gbdt => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Mode::Plain),
            1 => Some(Mode::Verifiable),
            2 => Some(Mode::Gbdt),
            _ => None,
        }
    }

    pub fn needs_mac_key(self) -> bool {
        !matches!(self, Mode::Plain)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Plain => "plain",
            Mode::Verifiable => "verifiable",
            Mode::Gbdt => "gbdt",
        })
    }
}

impl FromStr for Mode {
    type Err = HssError;

    fn from_str(s: &str) -> Result<Self, HssError> {
        match s {
            "plain" => Ok(Mode::Plain),
            "verifiable" => Ok(Mode::Verifiable),
            "gbdt" => Ok(Mode::Gbdt),
            other => Err(HssError::Domain(format!("unknown mode {other:?}"))),
        }
    }
}

/// Which share of a response entry to corrupt.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TamperField {
    Pc,
    V,
    W,
}

impl FromStr for TamperField {
    type Err = HssError;

    fn from_str(s: &str) -> Result<Self, HssError> {
        match s {
            "pc" => Ok(TamperField::Pc),
            "v" => Ok(TamperField::V),
            "w" => Ok(TamperField::W),
            other => Err(HssError::Domain(format!("unknown tamper field {other:?}"))),
        }
    }
}

impl fmt::Display for TamperField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TamperField::Pc => "pc",
            TamperField::V => "v",
            TamperField::W => "w",
        })
    }
}

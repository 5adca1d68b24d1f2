//! Client-side flows shared by the commands: an in-process two-server
//! deployment, answer checking and response tampering.

use std::str::FromStr;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use hsstree_core::hss::paillier::KeySet;
use hsstree_core::protocol::{
    chosen_position, reconstruct, reconstruct_gbdt, verify, Mode, QuerySecret, Reject, ServerResponse, TamperField,
};
use hsstree_net::{LinkLedger, Loopback, ModelStore, Server};
use num_bigint::{BigInt, BigUint, RandBigInt};
use rand::RngCore;

/// Both servers in this process, behind one loopback network and ledger.
pub fn loopback(ks: &KeySet, ledger: Arc<LinkLedger>) -> Loopback {
    let pk = Arc::new(ks.pk.clone());
    let server = |ek| Arc::new(Server::new(pk.clone(), ek, Arc::new(ModelStore::in_memory()), ledger.clone()));
    Loopback::new(server(ks.ek0.clone()), server(ks.ek1.clone()))
}

/// Runs the reconstruction the query's mode calls for.
pub fn check_answer(
    r0: &ServerResponse,
    r1: &ServerResponse,
    secret: &QuerySecret,
    n: &BigUint,
) -> Result<BigInt, Reject> {
    let key = || secret.mac_key.as_ref().ok_or_else(|| Reject::Malformed("query kept no MAC key".into()));
    match secret.mode {
        Mode::Plain => reconstruct(r0, r1, n),
        Mode::Verifiable => verify(r0, r1, key()?, n),
        Mode::Gbdt => reconstruct_gbdt(r0, r1, key()?, n),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TamperTarget {
    /// The entry whose path cost reconstructs to zero.
    Chosen,
    Index(usize),
}

/// `{v,w,pc}:{index|chosen}`, applied to tree 0 of one server's response.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TamperSpec {
    pub field: TamperField,
    pub target: TamperTarget,
}

impl FromStr for TamperSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let (field, target) = s.split_once(':').ok_or_else(|| anyhow!("tamper spec {s:?} is not FIELD:TARGET"))?;
        let field = TamperField::from_str(field.trim_end_matches("-share"))?;
        let target = match target {
            "chosen" => TamperTarget::Chosen,
            i => TamperTarget::Index(i.parse().with_context(|| format!("tamper target {i:?}"))?),
        };
        Ok(TamperSpec { field, target })
    }
}

impl TamperSpec {
    /// Adds a random non-zero offset to the targeted share of `victim`;
    /// returns the position hit.
    pub fn apply(
        &self,
        victim: &mut ServerResponse,
        honest: [&ServerResponse; 2],
        n: &BigUint,
        rng: &mut dyn RngCore,
    ) -> Result<usize> {
        let position = match self.target {
            TamperTarget::Index(i) => i,
            TamperTarget::Chosen => chosen_position(honest[0], honest[1], 0, n)
                .context("honest responses have no unique zero path cost")?,
        };
        let k = victim.trees.first().map_or(0, Vec::len);
        if position >= k {
            bail!("tamper index {position} outside 0..{k}");
        }
        let delta = rng.gen_biguint_range(&BigUint::from(1u8), n);
        victim.tamper(0, position, self.field, &delta, n)?;
        Ok(position)
    }
}

use num_bigint::{BigInt, BigUint};
use num_traits::Zero;
use thiserror::Error;

use super::server::ServerResponse;
use super::{Mode, TamperField};
use crate::error::{HssError, Result};
use crate::hss::{centered, sub_mod};

/// Why the client refused a pair of responses.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Reject {
    #[error("tree {tree}: no zero path cost")]
    NoZero { tree: usize },
    #[error("tree {tree}: {count} zero path costs")]
    MultipleZeros { tree: usize, count: usize },
    #[error("MAC check failed")]
    MacMismatch,
    #[error("malformed responses: {0}")]
    Malformed(String),
}

impl Reject {
    /// Stable numeric code, used as CLI exit status and on the wire.
    pub fn code(&self) -> u8 {
        match self {
            Reject::NoZero { .. } => 2,
            Reject::MultipleZeros { .. } => 3,
            Reject::MacMismatch => 4,
            Reject::Malformed(_) => 5,
        }
    }
}

fn check_pair(r0: &ServerResponse, r1: &ServerResponse, mode: Mode) -> Result<(), Reject> {
    let bad = |msg: &str| Err(Reject::Malformed(msg.into()));
    if r0.sigma != 0 || r1.sigma != 1 {
        return bad("responses must come from servers 0 and 1");
    }
    if r0.mode != mode || r1.mode != mode {
        return bad("response mode differs from the query");
    }
    if r0.trees.len() != r1.trees.len() || r0.trees.is_empty() {
        return bad("tree counts differ");
    }
    if r0.trees.iter().zip(&r1.trees).any(|(a, b)| a.len() != b.len() || a.is_empty()) {
        return bad("leaf counts differ");
    }
    let needs_w = mode.needs_mac_key();
    if r0.trees.iter().chain(&r1.trees).flatten().any(|l| l.w.is_some() != needs_w) {
        return bad("MAC shares missing or unexpected");
    }
    if (mode == Mode::Gbdt) != (r0.t0.is_some() && r1.t0.is_some()) {
        return bad("T0 shares missing or unexpected");
    }
    Ok(())
}

fn locate(r0: &ServerResponse, r1: &ServerResponse, tree: usize, n: &BigUint) -> Result<usize, Reject> {
    let zeros: Vec<usize> = r0.trees[tree]
        .iter()
        .zip(&r1.trees[tree])
        .enumerate()
        .filter(|(_, (a, b))| sub_mod(&b.pc, &a.pc, n).is_zero())
        .map(|(i, _)| i)
        .collect();
    match zeros.len() {
        0 => Err(Reject::NoZero { tree }),
        1 => Ok(zeros[0]),
        count => Err(Reject::MultipleZeros { tree, count }),
    }
}

/// Position of the unique zero path cost of `tree`, if there is one.
pub fn chosen_position(r0: &ServerResponse, r1: &ServerResponse, tree: usize, n: &BigUint) -> Option<usize> {
    locate(r0, r1, tree, n).ok()
}

/// Plain reconstruction: centered label at the unique zero path cost.
pub fn reconstruct(r0: &ServerResponse, r1: &ServerResponse, n: &BigUint) -> Result<BigInt, Reject> {
    check_pair(r0, r1, r0.mode)?;
    if r0.trees.len() != 1 || r0.mode == Mode::Gbdt {
        return Err(Reject::Malformed("single-tree responses expected".into()));
    }
    let i = locate(r0, r1, 0, n)?;
    Ok(centered(&sub_mod(&r1.trees[0][i].v, &r0.trees[0][i].v, n), n))
}

/// Verifiable reconstruction: additionally requires `A·v ≡ w (mod N)`.
pub fn verify(
    r0: &ServerResponse,
    r1: &ServerResponse,
    mac_key: &BigUint,
    n: &BigUint,
) -> Result<BigInt, Reject> {
    check_pair(r0, r1, Mode::Verifiable)?;
    if r0.trees.len() != 1 {
        return Err(Reject::Malformed("single-tree responses expected".into()));
    }
    let i = locate(r0, r1, 0, n)?;
    let (a, b) = (&r0.trees[0][i], &r1.trees[0][i]);
    let v = sub_mod(&b.v, &a.v, n);
    let w = sub_mod(b.w.as_ref().expect("checked"), a.w.as_ref().expect("checked"), n);
    if mac_key * &v % n != w {
        return Err(Reject::MacMismatch);
    }
    Ok(centered(&v, n))
}

/// Ensemble reconstruction; returns the aggregate at scale `2^(2f)`.
pub fn reconstruct_gbdt(
    r0: &ServerResponse,
    r1: &ServerResponse,
    mac_key: &BigUint,
    n: &BigUint,
) -> Result<BigInt, Reject> {
    check_pair(r0, r1, Mode::Gbdt)?;
    let (t0_a, p0_a) = r0.t0.as_ref().expect("checked");
    let (t0_b, p0_b) = r1.t0.as_ref().expect("checked");
    let mut total = sub_mod(t0_b, t0_a, n);
    let mut proof = sub_mod(p0_b, p0_a, n);
    for tree in 0..r0.trees.len() {
        let i = locate(r0, r1, tree, n)?;
        let (a, b) = (&r0.trees[tree][i], &r1.trees[tree][i]);
        total = (total + sub_mod(&b.v, &a.v, n)) % n;
        let w = sub_mod(b.w.as_ref().expect("checked"), a.w.as_ref().expect("checked"), n);
        proof = (proof + w) % n;
    }
    if mac_key * &total % n != proof {
        return Err(Reject::MacMismatch);
    }
    Ok(centered(&total, n))
}

impl ServerResponse {
    /// Adds `delta` to one share, as a misbehaving server would.
    pub fn tamper(
        &mut self,
        tree: usize,
        position: usize,
        field: TamperField,
        delta: &BigUint,
        n: &BigUint,
    ) -> Result<()> {
        let entry = self
            .trees
            .get_mut(tree)
            .and_then(|t| t.get_mut(position))
            .ok_or_else(|| HssError::Domain(format!("no entry {position} in tree {tree}")))?;
        let slot = match field {
            TamperField::Pc => &mut entry.pc,
            TamperField::V => &mut entry.v,
            TamperField::W => entry
                .w
                .as_mut()
                .ok_or_else(|| HssError::Domain("response carries no MAC shares".into()))?,
        };
        *slot = (&*slot + delta) % n;
        Ok(())
    }
}

use num_bigint::{BigInt, BigUint, Sign};

use super::masks::{derive_mask_plan, MaskPlan, TreeMasks};
use super::model::{ClientQuery, EncryptedModel, EncryptedTest, EncryptedTree};
use super::Mode;
use crate::compare::{set_membership, sic, BitCiphertextVector};
use crate::error::{HssError, Result};
use crate::hss::{Evaluator, Share};

/// One server's shares for one (permuted) leaf.
///
/// In gbdt mode `v` carries `η·v*` and `w` its MAC.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeafShare {
    pub pc: BigUint,
    pub v: BigUint,
    pub w: Option<BigUint>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ServerResponse {
    pub sigma: u8,
    pub mode: Mode,
    /// Per tree, `k` entries in permuted order.
    pub trees: Vec<Vec<LeafShare>>,
    /// `T₀` share and its MAC share (gbdt mode).
    pub t0: Option<(BigUint, BigUint)>,
}

impl ServerResponse {
    /// Number of shares carried.
    pub fn share_count(&self) -> usize {
        let leaves: usize = self
            .trees
            .iter()
            .flatten()
            .map(|l| 2 + usize::from(l.w.is_some()))
            .sum();
        leaves + if self.t0.is_some() { 2 } else { 0 }
    }
}

/// Multiplications one server performs for `model` in `mode`.
pub fn expected_muls<C>(model: &EncryptedModel<C>, mode: Mode) -> u64 {
    let per_leaf = match mode {
        Mode::Plain => 1,
        Mode::Verifiable => 2,
        Mode::Gbdt => 3,
    };
    let trees: u64 = model
        .trees
        .iter()
        .map(|tree| {
            let t = u64::from(tree.t);
            let nodes: u64 = tree
                .tests
                .iter()
                .map(|test| match test {
                    EncryptedTest::Threshold(_) => 4 * t - 2,
                    EncryptedTest::Member(set) => 3 * t * set.len() as u64,
                })
                .sum();
            nodes + per_leaf * tree.k() as u64
        })
        .sum();
    trees + if mode == Mode::Gbdt { 2 } else { 0 }
}

fn check_query<C, Q>(model: &EncryptedModel<C>, query: &ClientQuery<Q>) -> Result<()> {
    let err = |msg: String| Err(HssError::Protocol(msg));
    model.validate()?;
    match (query.mode, model.gbdt.is_some()) {
        (Mode::Gbdt, false) => return err("gbdt query against a single-tree model".into()),
        (Mode::Plain | Mode::Verifiable, true) => {
            return err(format!("{} query against an ensemble", query.mode))
        }
        _ => {}
    }
    if query.mode.needs_mac_key() && query.c_a.is_none() {
        return err(format!("{} query without a MAC key", query.mode));
    }
    if query.cmx.len() != model.trees.len() {
        return err(format!("query covers {} trees, model has {}", query.cmx.len(), model.trees.len()));
    }
    for (j, (rows, tree)) in query.cmx.iter().zip(&model.trees).enumerate() {
        if rows.len() != tree.m() {
            return err(format!("tree {j}: {} selected features for {} nodes", rows.len(), tree.m()));
        }
        if rows.iter().any(|r| r.width() != tree.t as usize) {
            return err(format!("tree {j}: selected feature width differs from t = {}", tree.t));
        }
    }
    Ok(())
}

/// Memory values of `b_j` for every decision node.
pub fn node_outcomes<E: Evaluator>(
    ev: &E,
    tree: &EncryptedTree<E::Ciphertext>,
    cmx: &[BitCiphertextVector<E::Ciphertext>],
) -> Result<Vec<E::Memory>> {
    tree.tests
        .iter()
        .zip(cmx)
        .map(|(test, x)| match test {
            EncryptedTest::Threshold(y) => sic(ev, x, y),
            EncryptedTest::Member(set) => set_membership(ev, x, set),
        })
        .collect()
}

/// Masked `(pc*, v*)` memory values, leaf order.
fn masked_leaves<E: Evaluator>(
    ev: &E,
    tree: &EncryptedTree<E::Ciphertext>,
    b: &[E::Memory],
    masks: &TreeMasks,
) -> Result<Vec<(E::Memory, E::Memory)>> {
    let one = ev.trivial_one();
    // (left edge cost 1 − b_j, right edge cost b_j)
    let edges = b
        .iter()
        .map(|bj| Ok((ev.sub(&one, bj)?, bj.clone())))
        .collect::<Result<Vec<_>>>()?;
    let k = tree.k();
    let m = tree.m();
    (0..k)
        .map(|i| {
            let mut pc = ev.zero();
            let mut idx = m + i;
            while idx > 0 {
                let parent = (idx - 1) / 2;
                let edge = if idx == 2 * parent + 1 { &edges[parent].0 } else { &edges[parent].1 };
                pc = ev.add(&pc, edge)?;
                idx = parent;
            }
            let r0 = BigInt::from_biguint(Sign::Plus, masks.r0[i].clone());
            let r1 = BigInt::from_biguint(Sign::Plus, masks.r1[i].clone());
            let pc_star = ev.cmul(&r0, &pc);
            let v = ev.convert_input(&tree.cv[i])?;
            let v_star = ev.add(&v, &ev.cmul(&r1, &pc))?;
            Ok((pc_star, v_star))
        })
        .collect()
}

fn permute<T: Clone>(entries: Vec<T>, pi: &[usize]) -> Vec<T> {
    let mut out: Vec<Option<T>> = vec![None; entries.len()];
    for (i, e) in entries.into_iter().enumerate() {
        out[pi[i]] = Some(e);
    }
    out.into_iter().map(|e| e.expect("pi is a bijection")).collect()
}

/// Server σ adds `mask` to its share when σ = 1.
fn masked_output<E: Evaluator>(ev: &E, m: &E::Memory, mask: &BigUint) -> Share {
    let mut s = ev.output(m);
    if s.sigma == 1 {
        s.value = (s.value + mask) % ev.modulus();
    }
    s
}

/// Evaluates one query with masks derived from the evaluation key's PRF.
pub fn server_evaluate<E: Evaluator>(
    ev: &E,
    model: &EncryptedModel<E::Ciphertext>,
    query: &ClientQuery<E::Ciphertext>,
) -> Result<ServerResponse> {
    check_query(model, query)?;
    let plan = derive_mask_plan(
        ev.prf_key(),
        ev.modulus(),
        &query.nonce,
        &model.leaves_per_tree(),
        query.mode == Mode::Gbdt,
    );
    server_evaluate_with_plan(ev, model, query, &plan)
}

/// Same as [`server_evaluate`] with an explicit plan (tests zero the
/// ensemble masks through this).
pub fn server_evaluate_with_plan<E: Evaluator>(
    ev: &E,
    model: &EncryptedModel<E::Ciphertext>,
    query: &ClientQuery<E::Ciphertext>,
    plan: &MaskPlan,
) -> Result<ServerResponse> {
    check_query(model, query)?;
    if plan.trees.len() != model.trees.len()
        || plan.trees.iter().zip(&model.trees).any(|(p, t)| p.r0.len() != t.k() || p.pi.len() != t.k())
        || (query.mode == Mode::Gbdt && plan.gbdt.is_none())
    {
        return Err(HssError::Protocol("mask plan does not match the model".into()));
    }
    let mode = query.mode;
    let mut trees = Vec::with_capacity(model.trees.len());
    for (j, (tree, cmx)) in model.trees.iter().zip(&query.cmx).enumerate() {
        let b = node_outcomes(ev, tree, cmx)?;
        let masks = &plan.trees[j];
        let leaves = masked_leaves(ev, tree, &b, masks)?;
        let entries = leaves
            .iter()
            .map(|(pc, v)| {
                let pc_share = ev.output(pc).value;
                match mode {
                    Mode::Plain => Ok(LeafShare { pc: pc_share, v: ev.output(v).value, w: None }),
                    Mode::Verifiable => {
                        let c_a = query.c_a.as_ref().expect("checked");
                        let w = ev.mul(c_a, v)?;
                        Ok(LeafShare { pc: pc_share, v: ev.output(v).value, w: Some(ev.output(&w).value) })
                    }
                    Mode::Gbdt => {
                        let g = model.gbdt.as_ref().expect("checked");
                        let gm = plan.gbdt.as_ref().expect("checked");
                        let c_a = query.c_a.as_ref().expect("checked");
                        let mu = ev.mul(&g.c_eta, v)?;
                        let tau = ev.mul(c_a, &mu)?;
                        Ok(LeafShare {
                            pc: pc_share,
                            v: masked_output(ev, &mu, &gm.r[j + 1]).value,
                            w: Some(masked_output(ev, &tau, &gm.r_proof[j + 1]).value),
                        })
                    }
                }
            })
            .collect::<Result<Vec<_>>>()?;
        trees.push(permute(entries, &masks.pi));
    }
    let t0 = if mode == Mode::Gbdt {
        let g = model.gbdt.as_ref().expect("checked");
        let gm = plan.gbdt.as_ref().expect("checked");
        let c_a = query.c_a.as_ref().expect("checked");
        let m_t0 = ev.convert_input(&g.c_t0)?;
        let proof = ev.mul(c_a, &m_t0)?;
        Some((masked_output(ev, &m_t0, &gm.r[0]).value, masked_output(ev, &proof, &gm.r_proof[0]).value))
    } else {
        None
    };
    Ok(ServerResponse { sigma: ev.sigma(), mode, trees, t0 })
}

use num_bigint::{BigInt, BigUint, RandBigInt};
use num_traits::{One, Signed};
use rand::RngCore;

use super::Mode;
use crate::compare::{bit_decompose, encrypt_bits, BitCiphertextVector};
use crate::error::{HssError, Result};
use crate::hss::Encryptor;
use crate::tree::{build_feature_matrix, DecisionTree, FeatureVector, GbdtModel, NodeTest};

/// Encrypted test at one decision node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EncryptedTest<C> {
    Threshold(BitCiphertextVector<C>),
    Member(Vec<BitCiphertextVector<C>>),
}

/// One complete tree as stored by the servers, plus its encrypted feature map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncryptedTree<C> {
    pub h: u32,
    pub n: usize,
    pub t: u32,
    pub tests: Vec<EncryptedTest<C>>,
    /// Labels, left to right.
    pub cv: Vec<C>,
    /// `m × n` one-hot matrix, encrypted densely.
    pub cm: Vec<Vec<C>>,
}

impl<C> EncryptedTree<C> {
    pub fn m(&self) -> usize {
        (1usize << self.h) - 1
    }

    pub fn k(&self) -> usize {
        1usize << self.h
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(HssError::Protocol(format!("encrypted tree: {what}")));
        if self.h == 0 || self.h > 30 || self.n == 0 || self.t == 0 {
            return bad("empty shape");
        }
        if self.tests.len() != self.m() || self.cv.len() != self.k() || self.cm.len() != self.m() {
            return bad("dimensions disagree with height");
        }
        if self.cm.iter().any(|row| row.len() != self.n) {
            return bad("feature map row length differs from n");
        }
        let t = self.t as usize;
        let widths_ok = self.tests.iter().all(|test| match test {
            EncryptedTest::Threshold(y) => y.width() == t,
            EncryptedTest::Member(set) => set.iter().all(|s| s.width() == t),
        });
        if !widths_ok {
            return bad("bit width differs from t");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GbdtCiphertexts<C> {
    pub c_eta: C,
    pub c_t0: C,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncryptedModel<C> {
    pub frac_bits: u32,
    pub trees: Vec<EncryptedTree<C>>,
    pub gbdt: Option<GbdtCiphertexts<C>>,
}

impl<C> EncryptedModel<C> {
    pub fn n(&self) -> usize {
        self.trees[0].n
    }

    pub fn t(&self) -> u32 {
        self.trees[0].t
    }

    pub fn leaves_per_tree(&self) -> Vec<usize> {
        self.trees.iter().map(EncryptedTree::k).collect()
    }

    /// Mode a query against this model must use by default.
    pub fn default_mode(&self) -> Mode {
        if self.gbdt.is_some() {
            Mode::Gbdt
        } else {
            Mode::Verifiable
        }
    }

    pub fn validate(&self) -> Result<()> {
        let first = self
            .trees
            .first()
            .ok_or_else(|| HssError::Protocol("model without trees".into()))?;
        for tree in &self.trees {
            tree.validate()?;
            if tree.n != first.n || tree.t != first.t {
                return Err(HssError::Protocol("trees disagree on n or t".into()));
            }
        }
        if self.gbdt.is_none() && self.trees.len() != 1 {
            return Err(HssError::Protocol("several trees without ensemble parameters".into()));
        }
        Ok(())
    }

    /// Per-tree encrypted feature maps, the part a client downloads.
    pub fn feature_maps(&self) -> Vec<&Vec<Vec<C>>> {
        self.trees.iter().map(|t| &t.cm).collect()
    }
}

/// Rejects values the servers could not carry exactly (`|v| ≥ N/4`).
fn check_magnitude(v: &BigInt, n: &BigUint, what: &str) -> Result<()> {
    if (v.abs() << 2u32) >= BigInt::from(n.clone()) {
        return Err(HssError::Domain(format!("{what} {v} exceeds N/4")));
    }
    Ok(())
}

pub fn encrypt_tree<E: Encryptor>(
    enc: &E,
    tree: &DecisionTree,
    rng: &mut dyn RngCore,
) -> Result<EncryptedTree<E::Ciphertext>> {
    tree.validate().map_err(|e| HssError::Domain(e.to_string()))?;
    let t = tree.t;
    let tests = tree
        .nodes
        .iter()
        .map(|node| match &node.test {
            NodeTest::Threshold(y) => encrypt_bits(enc, *y, t, rng).map(EncryptedTest::Threshold),
            NodeTest::MemberOf(set) => set
                .iter()
                .map(|s| encrypt_bits(enc, *s, t, rng))
                .collect::<Result<Vec<_>>>()
                .map(EncryptedTest::Member),
        })
        .collect::<Result<Vec<_>>>()?;
    let cv = tree
        .leaves
        .iter()
        .map(|&v| {
            let v = BigInt::from(v);
            check_magnitude(&v, enc.modulus(), "label")?;
            enc.input_signed(&v, rng)
        })
        .collect::<Result<Vec<_>>>()?;
    let cm = build_feature_matrix(tree)
        .rows
        .iter()
        .map(|row| row.iter().map(|&b| enc.input_u64(u64::from(b), rng)).collect())
        .collect::<Result<Vec<_>>>()?;
    Ok(EncryptedTree { h: tree.h, n: tree.n, t, tests, cv, cm })
}

pub fn encrypt_tree_model<E: Encryptor>(
    enc: &E,
    tree: &DecisionTree,
    rng: &mut dyn RngCore,
) -> Result<EncryptedModel<E::Ciphertext>> {
    Ok(EncryptedModel { frac_bits: tree.frac_bits, trees: vec![encrypt_tree(enc, tree, rng)?], gbdt: None })
}

pub fn encrypt_gbdt_model<E: Encryptor>(
    enc: &E,
    model: &GbdtModel,
    rng: &mut dyn RngCore,
) -> Result<EncryptedModel<E::Ciphertext>> {
    model.validate().map_err(|e| HssError::Domain(e.to_string()))?;
    let n = enc.modulus();
    let max_label = model.trees.iter().flat_map(|t| t.leaves.iter()).map(|v| v.unsigned_abs()).max();
    let bound = BigInt::from(model.eta.unsigned_abs())
        * BigInt::from(max_label.unwrap_or(0))
        * BigInt::from(model.trees.len())
        + BigInt::from(model.t0.unsigned_abs());
    check_magnitude(&bound, n, "ensemble output bound")?;
    let trees = model
        .trees
        .iter()
        .map(|t| encrypt_tree(enc, t, rng))
        .collect::<Result<Vec<_>>>()?;
    let gbdt = GbdtCiphertexts {
        c_eta: enc.input_signed(&BigInt::from(model.eta), rng)?,
        c_t0: enc.input_signed(&BigInt::from(model.t0), rng)?,
    };
    Ok(EncryptedModel { frac_bits: model.frac_bits, trees, gbdt: Some(gbdt) })
}

/// Secure feature selection: entry `(j, i)` encrypts bit `i` of `x_{δ(j)}`.
///
/// Each entry is the sum of the map ciphertexts `cm[j][s]` over the
/// features whose bit `i` is set, re-randomized with a fresh encryption of 0.
pub fn sfs<E: Encryptor>(
    enc: &E,
    cm: &[Vec<E::Ciphertext>],
    x: &FeatureVector,
    t: u32,
    rng: &mut dyn RngCore,
) -> Result<Vec<BitCiphertextVector<E::Ciphertext>>> {
    let n = x.0.len();
    if cm.iter().any(|row| row.len() != n) {
        return Err(HssError::Domain(format!("feature map rows do not have {n} columns")));
    }
    x.validate(n, t).map_err(|e| HssError::Domain(e.to_string()))?;
    let bits: Vec<Vec<u8>> = x.0.iter().map(|&v| bit_decompose(v, t)).collect();
    cm.iter()
        .map(|row| {
            let bits = (0..t as usize)
                .map(|i| {
                    let mut acc = enc.input_u64(0, rng)?;
                    for (s, c) in row.iter().enumerate() {
                        if bits[s][i] == 1 {
                            acc = enc.add_ct(&acc, c);
                        }
                    }
                    Ok(acc)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(BitCiphertextVector { bits })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClientQuery<C> {
    pub mode: Mode,
    /// Per tree, `m` rows of `t` bit ciphertexts.
    pub cmx: Vec<Vec<BitCiphertextVector<C>>>,
    /// MAC key; absent in plain mode.
    pub c_a: Option<C>,
    pub nonce: [u8; 16],
}

/// What the client keeps to check the answer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuerySecret {
    pub mode: Mode,
    pub nonce: [u8; 16],
    pub mac_key: Option<BigUint>,
}

pub fn client_build_query<E: Encryptor>(
    enc: &E,
    feature_maps: &[&Vec<Vec<E::Ciphertext>>],
    x: &FeatureVector,
    t: u32,
    mode: Mode,
    rng: &mut dyn RngCore,
) -> Result<(ClientQuery<E::Ciphertext>, QuerySecret)> {
    if feature_maps.is_empty() {
        return Err(HssError::Domain("no feature maps".into()));
    }
    if mode != Mode::Gbdt && feature_maps.len() != 1 {
        return Err(HssError::Domain(format!("{mode} mode needs a single tree")));
    }
    let cmx = feature_maps
        .iter()
        .map(|cm| sfs(enc, cm, x, t, rng))
        .collect::<Result<Vec<_>>>()?;
    let mut nonce = [0u8; 16];
    rng.fill_bytes(&mut nonce);
    let (c_a, mac_key) = if mode.needs_mac_key() {
        let a = rng.gen_biguint_range(&BigUint::one(), enc.modulus());
        (Some(enc.input(&a, rng)?), Some(a))
    } else {
        (None, None)
    };
    Ok((ClientQuery { mode, cmx, c_a, nonce }, QuerySecret { mode, nonce, mac_key }))
}

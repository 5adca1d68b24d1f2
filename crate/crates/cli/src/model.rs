//! Plaintext model sources and feature parsing.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use hsstree_core::compare::FixedPointSpec;
use hsstree_core::hss::paillier::{Ciphertext, PublicKey};
use hsstree_core::protocol::{encrypt_gbdt_model, encrypt_tree_model, EncryptedModel, Mode};
use hsstree_core::tree::{
    eval_gbdt_plain, eval_plain, load_gbdt, load_tree, pad_complete, random_tree, DecisionTree, FeatureVector,
    GbdtModel, TreeShape,
};
use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rand::RngCore;

#[derive(Clone, Debug)]
pub enum PlainModel {
    Tree(DecisionTree),
    Gbdt(GbdtModel),
}

impl PlainModel {
    /// A JSON document with a `trees` array is an ensemble; anything else a
    /// single tree, padded to `height` (default: its own height).
    pub fn load(path: &Path, height: Option<u32>) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("read {}", path.display()))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).with_context(|| format!("parse {}", path.display()))?;
        if value.get("trees").is_some() {
            if height.is_some() {
                bail!("--height applies to single trees; ensembles are padded to their tallest tree");
            }
            return Ok(PlainModel::Gbdt(load_gbdt(&text)?));
        }
        let model = load_tree(&text)?;
        let h = height.unwrap_or_else(|| model.height().max(1));
        Ok(PlainModel::Tree(pad_complete(&model, h)?))
    }

    pub fn random(shape: TreeShape, label_bits: u32, rng: &mut (impl RngCore + ?Sized)) -> Self {
        PlainModel::Tree(random_tree(shape, label_bits, 0.0, rng))
    }

    pub fn n(&self) -> usize {
        match self {
            PlainModel::Tree(t) => t.n,
            PlainModel::Gbdt(g) => g.n(),
        }
    }

    pub fn t(&self) -> u32 {
        match self {
            PlainModel::Tree(t) => t.t,
            PlainModel::Gbdt(g) => g.t(),
        }
    }

    pub fn default_mode(&self) -> Mode {
        match self {
            PlainModel::Tree(_) => Mode::Verifiable,
            PlainModel::Gbdt(_) => Mode::Gbdt,
        }
    }

    pub fn encrypt(&self, pk: &PublicKey, rng: &mut dyn RngCore) -> Result<EncryptedModel<Ciphertext>> {
        Ok(match self {
            PlainModel::Tree(t) => encrypt_tree_model(pk, t, rng)?,
            PlainModel::Gbdt(g) => encrypt_gbdt_model(pk, g, rng)?,
        })
    }

    /// Cleartext answer at the scale the client reconstructs.
    pub fn expected(&self, x: &FeatureVector, payload_bits: u32) -> Result<BigInt> {
        Ok(match self {
            PlainModel::Tree(t) => BigInt::from(eval_plain(t, x).0),
            PlainModel::Gbdt(g) => BigInt::from(eval_gbdt_plain(g, x, payload_bits)?),
        })
    }
}

/// Comma-separated values. With `encoded`, values are taken as the
/// `t`-bit codes; otherwise decimals are fixed-point scaled except for the
/// one-based `categorical` positions, which are raw category codes.
pub fn parse_features(
    text: &str,
    n: usize,
    t: u32,
    frac_bits: u32,
    categorical: &[usize],
    encoded: bool,
) -> Result<FeatureVector> {
    let values = text
        .split(',')
        .map(|v| v.trim().parse::<f64>().with_context(|| format!("feature {v:?} is not a number")))
        .collect::<Result<Vec<_>>>()?;
    if values.len() != n {
        bail!("model expects {n} features, got {}", values.len());
    }
    let x = if encoded {
        let codes = values
            .iter()
            .map(|&v| {
                if v < 0.0 || v.fract() != 0.0 {
                    bail!("encoded feature {v} is not a non-negative integer");
                }
                Ok(v as u64)
            })
            .collect::<Result<Vec<_>>>()?;
        FeatureVector(codes)
    } else {
        if let Some(&bad) = categorical.iter().find(|&&i| i == 0 || i > n) {
            bail!("categorical position {bad} outside 1..={n}");
        }
        let zero_based: Vec<usize> = categorical.iter().map(|i| i - 1).collect();
        FeatureVector::encode(&values, &zero_based, &FixedPointSpec::new(t, frac_bits)?)?
    };
    x.validate(n, t)?;
    Ok(x)
}

/// Decimal rendering of a reconstructed answer.
pub fn descale(value: &BigInt, mode: Mode, frac_bits: u32) -> f64 {
    let bits = if mode == Mode::Gbdt { 2 * frac_bits } else { frac_bits };
    value.to_f64().unwrap_or(f64::NAN) / 2f64.powi(bits as i32)
}

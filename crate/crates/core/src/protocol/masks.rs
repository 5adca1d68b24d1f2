use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::hss::sub_mod;

/// Per-tree randomizers for one query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeMasks {
    /// Path-cost multipliers, units mod N.
    pub r0: Vec<BigUint>,
    /// Label masks.
    pub r1: Vec<BigUint>,
    /// Leaf `i` is reported at position `pi[i]`.
    pub pi: Vec<usize>,
}

/// Additive masks for an ensemble. Index 0 belongs to `T₀`, index `j + 1`
/// to tree `j`; each vector sums to 0 mod N.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GbdtMasks {
    pub r: Vec<BigUint>,
    pub r_proof: Vec<BigUint>,
}

impl GbdtMasks {
    pub fn zeroed(trees: usize) -> Self {
        Self { r: vec![BigUint::zero(); trees + 1], r_proof: vec![BigUint::zero(); trees + 1] }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaskPlan {
    pub trees: Vec<TreeMasks>,
    pub gbdt: Option<GbdtMasks>,
}

/// PRF: SHA-256 of key, nonce and label seeds a ChaCha20 stream.
fn prf(k_prf: &[u8; 16], nonce: &[u8; 16], label: &[&[u8]]) -> ChaCha20Rng {
    let mut h = Sha256::new();
    h.update(k_prf);
    h.update(nonce);
    for part in label {
        h.update((part.len() as u32).to_be_bytes());
        h.update(part);
    }
    ChaCha20Rng::from_seed(h.finalize().into())
}

fn unit_below(rng: &mut ChaCha20Rng, n: &BigUint) -> BigUint {
    loop {
        let r = rng.gen_biguint_below(n);
        if !r.is_zero() && r.gcd(n).is_one() {
            return r;
        }
    }
}

fn zero_sum(k_prf: &[u8; 16], nonce: &[u8; 16], n: &BigUint, tag: &[u8], len: usize) -> Vec<BigUint> {
    let mut out: Vec<BigUint> = (0..len - 1)
        .map(|j| prf(k_prf, nonce, &[tag, &(j as u64).to_be_bytes()]).gen_biguint_below(n))
        .collect();
    let partial = out.iter().fold(BigUint::zero(), |acc, r| (acc + r) % n);
    out.push(sub_mod(&BigUint::zero(), &partial, n));
    out
}

/// Both servers call this with the same inputs and get the same plan.
pub fn derive_mask_plan(
    k_prf: &[u8; 16],
    n: &BigUint,
    nonce: &[u8; 16],
    leaves_per_tree: &[usize],
    gbdt: bool,
) -> MaskPlan {
    let trees = leaves_per_tree
        .iter()
        .enumerate()
        .map(|(tree, &k)| {
            let tree_tag = (tree as u32).to_be_bytes();
            let mut r0 = Vec::with_capacity(k);
            let mut r1 = Vec::with_capacity(k);
            for i in 0..k as u64 {
                let idx = i.to_be_bytes();
                r0.push(unit_below(&mut prf(k_prf, nonce, &[b"pc", &tree_tag, &idx]), n));
                r1.push(prf(k_prf, nonce, &[b"label", &tree_tag, &idx]).gen_biguint_below(n));
            }
            let mut pi: Vec<usize> = (0..k).collect();
            pi.shuffle(&mut prf(k_prf, nonce, &[b"perm", &tree_tag]));
            TreeMasks { r0, r1, pi }
        })
        .collect();
    let gbdt = gbdt.then(|| {
        let len = leaves_per_tree.len() + 1;
        GbdtMasks {
            r: zero_sum(k_prf, nonce, n, b"gbdt", len),
            r_proof: zero_sum(k_prf, nonce, n, b"gbdt-proof", len),
        }
    });
    MaskPlan { trees, gbdt }
}

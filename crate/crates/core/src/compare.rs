//! Non-interactive comparison and equality over bitwise-encrypted integers.
//!
//! Bits are indexed LSB first. Both servers run the same straight-line
//! program on their own evaluation key and end with shares of a single bit.

use num_bigint::BigUint;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{HssError, Result};
use crate::hss::{Encryptor, Evaluator};

/// Ciphertexts of the bits of a `t`-bit integer, least significant first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitCiphertextVector<C> {
    pub bits: Vec<C>,
}

impl<C> BitCiphertextVector<C> {
    pub fn width(&self) -> usize {
        self.bits.len()
    }
}

/// Bits of `value`, least significant first.
pub fn bit_decompose(value: u64, t: u32) -> Vec<u8> {
    (0..t).map(|i| ((value >> i) & 1) as u8).collect()
}

pub fn encrypt_bits<E: Encryptor>(
    enc: &E,
    value: u64,
    t: u32,
    rng: &mut dyn RngCore,
) -> Result<BitCiphertextVector<E::Ciphertext>> {
    if t < 64 && value >> t != 0 {
        return Err(HssError::Domain(format!("{value} does not fit in {t} bits")));
    }
    let bits = bit_decompose(value, t)
        .into_iter()
        .map(|b| enc.input(&BigUint::from(b), rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(BitCiphertextVector { bits })
}

fn check_widths<C>(a: &BitCiphertextVector<C>, b: &BitCiphertextVector<C>) -> Result<()> {
    if a.width() != b.width() {
        return Err(HssError::Domain(format!(
            "comparison of {}-bit and {}-bit operands",
            a.width(),
            b.width()
        )));
    }
    if a.width() == 0 {
        return Err(HssError::Domain("comparison of empty bit vectors".into()));
    }
    Ok(())
}

/// Memory value of `(α > β)`; costs exactly `4t − 2` multiplication gates.
pub fn sic<E: Evaluator>(
    ev: &E,
    alpha: &BitCiphertextVector<E::Ciphertext>,
    beta: &BitCiphertextVector<E::Ciphertext>,
) -> Result<E::Memory> {
    check_widths(alpha, beta)?;
    let one = ev.trivial_one();
    // c₁ = α₁(1 − β₁)
    let m_a = ev.convert_input(&alpha.bits[0])?;
    let ab = ev.mul(&beta.bits[0], &m_a)?;
    let mut c = ev.sub(&m_a, &ab)?;

    // c_{i+1} = c_i − c_i(α+β) + (2c_i − 1)αβ + α
    for (a, b) in alpha.bits.iter().zip(&beta.bits).skip(1) {
        let m_a = ev.convert_input(a)?;
        let a_plus_b = ev.add_ct(a, b);
        let mut next = ev.mul(&a_plus_b, &c)?;
        next = ev.sub(&c, &next)?;
        let two_c = ev.add(&c, &c)?;
        let two_c_minus_one = ev.sub(&two_c, &one)?;
        let mut tmp = ev.mul(a, &two_c_minus_one)?;
        tmp = ev.mul(b, &tmp)?;
        next = ev.add(&next, &tmp)?;
        c = ev.add(&next, &m_a)?;
    }
    Ok(c)
}

/// Memory value of `(α = β)`; costs exactly `3t` multiplication gates.
pub fn seq<E: Evaluator>(
    ev: &E,
    alpha: &BitCiphertextVector<E::Ciphertext>,
    beta: &BitCiphertextVector<E::Ciphertext>,
) -> Result<E::Memory> {
    check_widths(alpha, beta)?;
    let one = ev.trivial_one();
    // c₁ = 1 − α₁ − β₁ + 2α₁β₁
    let m_a = ev.convert_input(&alpha.bits[0])?;
    let m_b = ev.convert_input(&beta.bits[0])?;
    let ab = ev.mul(&beta.bits[0], &m_a)?;
    let mut c = ev.add(&ab, &ab)?;
    c = ev.sub(&c, &m_a)?;
    c = ev.sub(&c, &m_b)?;
    c = ev.add(&c, &one)?;

    // c_{i+1} = c_i − c_i(α+β) + 2c_i·αβ
    for (a, b) in alpha.bits.iter().zip(&beta.bits).skip(1) {
        let a_plus_b = ev.add_ct(a, b);
        let mut next = ev.mul(&a_plus_b, &c)?;
        next = ev.sub(&c, &next)?;
        let two_c = ev.add(&c, &c)?;
        let mut tmp = ev.mul(a, &two_c)?;
        tmp = ev.mul(b, &tmp)?;
        c = ev.add(&next, &tmp)?;
    }
    Ok(c)
}

/// Memory value of `(x ∈ S)` as the sum of equality tests.
///
/// Elements of `S` must be pairwise distinct. An empty set yields 0.
pub fn set_membership<E: Evaluator>(
    ev: &E,
    x: &BitCiphertextVector<E::Ciphertext>,
    set: &[BitCiphertextVector<E::Ciphertext>],
) -> Result<E::Memory> {
    let mut acc = ev.zero();
    for s in set {
        let eq = seq(ev, x, s)?;
        acc = ev.add(&acc, &eq)?;
    }
    Ok(acc)
}

/// Fixed-point encoding of decimal features and thresholds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedPointSpec {
    pub total_bits: u32,
    pub frac_bits: u32,
}

impl FixedPointSpec {
    pub fn new(total_bits: u32, frac_bits: u32) -> Result<Self> {
        if total_bits == 0 || total_bits > 62 || frac_bits >= total_bits {
            return Err(HssError::Domain(format!(
                "fixed-point spec t={total_bits}, f={frac_bits} invalid"
            )));
        }
        Ok(Self { total_bits, frac_bits })
    }

    pub fn scale(&self) -> f64 {
        (1u64 << self.frac_bits) as f64
    }

    pub fn offset(&self) -> i64 {
        1i64 << (self.total_bits - 1)
    }

    /// Scaled signed integer `round_half_even(value · 2^f)`, no offset.
    pub fn to_fixed(&self, value: f64) -> Result<i64> {
        if !value.is_finite() {
            return Err(HssError::Domain(format!("{value} is not finite")));
        }
        let scaled = (value * self.scale()).round_ties_even();
        if scaled.abs() >= 9.0e18 {
            return Err(HssError::Domain(format!("{value} overflows fixed point")));
        }
        Ok(scaled as i64)
    }

    pub fn from_fixed(&self, fixed: i64) -> f64 {
        fixed as f64 / self.scale()
    }
}

/// Scales, rounds half-to-even and offset-encodes into `[0, 2^t)`.
pub fn scale_fixed(value: f64, spec: &FixedPointSpec) -> Result<u64> {
    let encoded = spec.to_fixed(value)? + spec.offset();
    if encoded < 0 || encoded >> spec.total_bits != 0 {
        return Err(HssError::Domain(format!(
            "{value} does not fit {} bits with {} fractional bits",
            spec.total_bits, spec.frac_bits
        )));
    }
    Ok(encoded as u64)
}

/// Inverse of [`scale_fixed`].
pub fn unscale_fixed(encoded: u64, spec: &FixedPointSpec) -> f64 {
    spec.from_fixed(encoded as i64 - spec.offset())
}

/// `(α > β)` and the trace `(c₁, …, c_t)` using the unoptimized recursion
/// `c_{i+1} = α(1−β) + c_i(1 − α − β + 2αβ)` over the integers.
pub fn plain_compare_oracle(alpha: u64, beta: u64, t: u32) -> (u8, Vec<u8>) {
    let a = bit_decompose(alpha, t);
    let b = bit_decompose(beta, t);
    let mut c: i64 = 0;
    let mut trace = Vec::with_capacity(t as usize);
    for (&ai, &bi) in a.iter().zip(&b) {
        let (ai, bi) = (i64::from(ai), i64::from(bi));
        c = ai * (1 - bi) + c * (1 - ai - bi + 2 * ai * bi);
        trace.push(c as u8);
    }
    (trace.last().copied().unwrap_or(0), trace)
}

/// `(α = β)` via `c_{i+1} = (α_{i+1} = β_{i+1}) · c_i`, `c₀ = 1`.
pub fn plain_equal_oracle(alpha: u64, beta: u64, t: u32) -> u8 {
    let a = bit_decompose(alpha, t);
    let b = bit_decompose(beta, t);
    a.iter().zip(&b).fold(1i64, |c, (&ai, &bi)| {
        let (ai, bi) = (i64::from(ai), i64::from(bi));
        c * (1 - ai - bi + 2 * ai * bi)
    }) as u8
}

//! Homomorphic secret sharing for RMS programs.
//!
//! Two backends implement the same instruction set:
//! [`paillier`] is the real Paillier-ElGamal instantiation and [`oracle`]
//! computes in the clear and re-shares, for differential testing.
//!
//! A memory value held by server `σ` is a pair of integer shares
//! `(⟨x⟩_σ, ⟨d·x⟩_σ)` with `⟨x⟩_1 − ⟨x⟩_0 ≡ x` and
//! `⟨d·x⟩_1 − ⟨d·x⟩_0 ≡ d·x (mod N)`.

pub mod fixtures;
pub mod oracle;
pub mod paillier;
pub mod primes;
pub mod rms;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{Signed, Zero};
use rand::RngCore;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{HssError, Result};

/// Counts multiplication gates (Mul and ConvertInput) performed by one server.
#[derive(Debug, Default)]
pub struct GateCounter {
    muls: AtomicU64,
}

impl GateCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record_mul(&self) {
        self.muls.fetch_add(1, Ordering::Relaxed);
    }

    pub fn muls(&self) -> u64 {
        self.muls.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.muls.store(0, Ordering::Relaxed);
    }
}

/// One server's share of an intermediate value.
#[derive(Clone, PartialEq, Eq)]
pub struct MemoryValue {
    pub sigma: u8,
    pub x_share: BigInt,
    pub dx_share: BigInt,
}

impl fmt::Debug for MemoryValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "M[σ={}]", self.sigma)
    }
}

impl MemoryValue {
    fn same_server(&self, other: &Self) -> Result<()> {
        if self.sigma != other.sigma {
            return Err(HssError::Misuse(format!(
                "memory values of servers {} and {} combined",
                self.sigma, other.sigma
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_server(other)?;
        Ok(Self {
            sigma: self.sigma,
            x_share: &self.x_share + &other.x_share,
            dx_share: &self.dx_share + &other.dx_share,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_server(other)?;
        Ok(Self {
            sigma: self.sigma,
            x_share: &self.x_share - &other.x_share,
            dx_share: &self.dx_share - &other.dx_share,
        })
    }

    pub fn cmul(&self, c: &BigInt) -> Self {
        Self {
            sigma: self.sigma,
            x_share: &self.x_share * c,
            dx_share: &self.dx_share * c,
        }
    }
}

/// A subtractive share `⟨x⟩_σ ∈ [0, n_out)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Share {
    pub sigma: u8,
    pub value: BigUint,
}

impl Share {
    /// `value₁ − value₀ mod n`.
    pub fn reconstruct(s0: &Share, s1: &Share, n: &BigUint) -> Result<BigUint> {
        if s0.sigma != 0 || s1.sigma != 1 {
            return Err(HssError::Misuse("shares must come from servers 0 and 1".into()));
        }
        Ok(sub_mod(&s1.value, &s0.value, n))
    }
}

/// Server-side instruction set of an RMS program, bound to one evaluation key.
pub trait Evaluator: Send + Sync {
    type Ciphertext: Clone + Send + Sync;
    type Memory: Clone + Send + Sync + fmt::Debug;

    fn sigma(&self) -> u8;
    fn modulus(&self) -> &BigUint;
    fn prf_key(&self) -> &[u8; 16];
    fn gates(&self) -> &GateCounter;

    /// Memory value of the constant 1.
    fn trivial_one(&self) -> Self::Memory;
    fn convert_input(&self, c: &Self::Ciphertext) -> Result<Self::Memory>;
    fn mul(&self, c: &Self::Ciphertext, m: &Self::Memory) -> Result<Self::Memory>;
    fn add_ct(&self, a: &Self::Ciphertext, b: &Self::Ciphertext) -> Self::Ciphertext;
    fn add(&self, a: &Self::Memory, b: &Self::Memory) -> Result<Self::Memory>;
    fn sub(&self, a: &Self::Memory, b: &Self::Memory) -> Result<Self::Memory>;
    fn cmul(&self, c: &BigInt, a: &Self::Memory) -> Self::Memory;
    fn output(&self, m: &Self::Memory) -> Share;

    /// Memory value of the constant 0 (no gates).
    fn zero(&self) -> Self::Memory {
        self.cmul(&BigInt::zero(), &self.trivial_one())
    }

    /// Output with an explicit modulus; only `n_out = N` is supported.
    fn output_mod(&self, m: &Self::Memory, n_out: &BigUint) -> Result<Share> {
        if n_out != self.modulus() {
            return Err(HssError::UnsupportedModulus);
        }
        Ok(self.output(m))
    }
}

/// Client/provider side: produces input values.
pub trait Encryptor: Send + Sync {
    type Ciphertext: Clone + Send + Sync;

    fn modulus(&self) -> &BigUint;
    fn input(&self, x: &BigUint, rng: &mut dyn RngCore) -> Result<Self::Ciphertext>;
    fn add_ct(&self, a: &Self::Ciphertext, b: &Self::Ciphertext) -> Self::Ciphertext;

    fn input_u64(&self, x: u64, rng: &mut dyn RngCore) -> Result<Self::Ciphertext> {
        self.input(&BigUint::from(x), rng)
    }

    /// Encrypts a signed value as its residue mod N.
    fn input_signed(&self, x: &BigInt, rng: &mut dyn RngCore) -> Result<Self::Ciphertext> {
        let residue = reduce(x, self.modulus());
        self.input(&residue, rng)
    }
}

/// Test-only decryption (key escrow or cleartext oracle).
pub trait Decryptor {
    type Ciphertext;
    /// Returns the plaintexts of the main and companion parts.
    fn decrypt(&self, c: &Self::Ciphertext) -> Result<(BigUint, BigUint)>;
}

/// Non-negative residue of `x` mod `n`.
pub fn reduce(x: &BigInt, n: &BigUint) -> BigUint {
    let n = BigInt::from_biguint(Sign::Plus, n.clone());
    x.mod_floor(&n).to_biguint().expect("mod_floor is non-negative")
}

pub fn sub_mod(a: &BigUint, b: &BigUint, n: &BigUint) -> BigUint {
    let a = a % n;
    let b = b % n;
    if a >= b {
        a - b
    } else {
        a + n - b
    }
}

/// Maps a residue mod `n` to the representative in `(−n/2, n/2]`.
pub fn centered(x: &BigUint, n: &BigUint) -> BigInt {
    let x = x % n;
    let half = n >> 1;
    if x > half {
        BigInt::from(x) - BigInt::from(n.clone())
    } else {
        BigInt::from(x)
    }
}

/// Magnitude check used to keep payloads inside the exact-conversion range.
pub fn fits_payload(x: &BigInt, payload_bits: u32) -> bool {
    x.abs().bits() <= u64::from(payload_bits)
}

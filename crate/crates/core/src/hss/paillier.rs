//! HSS over Paillier-ElGamal: group elements live in `Z*_{N²}`, plaintexts
//! are carried in the `(1+N)` subgroup and shares are converted with a
//! distributed discrete logarithm in that subgroup.

use num_bigint::{BigInt, BigUint, RandBigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::RngCore;
use std::fmt;
use std::sync::Arc;

use super::primes::safe_prime;
use super::{Decryptor, Encryptor, Evaluator, GateCounter, MemoryValue, Share};
use crate::error::{HssError, Result};
use crate::params::HssParams;

const PRIME_WINDOWS: u32 = 4096;

/// ElGamal-style pair `(g^−r, h^r·(1+N)^m) mod N²`.
///
/// The first component is kept inverted so a multiplication needs no
/// modular inverse when both share exponents are non-negative.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ElGamalPair {
    pub c0: BigUint,
    pub c1: BigUint,
}

impl fmt::Debug for ElGamalPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pair({} bits, {} bits)", self.c0.bits(), self.c1.bits())
    }
}

/// HSS ciphertext: `main` encodes `x`, `companion` encodes `d·x`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Ciphertext {
    pub main: ElGamalPair,
    pub companion: ElGamalPair,
}

impl Ciphertext {
    pub fn elements(&self) -> [&BigUint; 4] {
        [&self.main.c0, &self.main.c1, &self.companion.c0, &self.companion.c1]
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct PublicKey {
    pub params: HssParams,
    pub n: BigUint,
    pub n2: BigUint,
    pub g: BigUint,
    pub g_inv: BigUint,
    pub h: BigUint,
    /// Encryption of the secret `d` under `(N, g, h)`.
    pub enc_of_d: ElGamalPair,
}

impl fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PublicKey").field("modulus_bits", &self.n.bits()).finish()
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct EvalKey {
    pub sigma: u8,
    /// `⟨d⟩_σ`, with `⟨d⟩_1 − ⟨d⟩_0 = d` over the integers.
    pub d_share: BigUint,
    pub k_prf: [u8; 16],
}

impl fmt::Debug for EvalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EvalKey(σ={})", self.sigma)
    }
}

/// The secret `d`, kept only under escrow profiles so tests can decrypt.
#[derive(Clone, PartialEq, Eq)]
pub struct EscrowKey {
    pub d: BigUint,
}

impl fmt::Debug for EscrowKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("EscrowKey(..)")
    }
}

#[derive(Clone, Debug)]
pub struct KeySet {
    pub pk: PublicKey,
    pub ek0: EvalKey,
    pub ek1: EvalKey,
    pub escrow: EscrowKey,
}

/// Generates fresh safe primes and runs [`setup_with_primes`].
pub fn setup(params: HssParams, rng: &mut dyn RngCore) -> Result<KeySet> {
    params.validate()?;
    let half = params.modulus_bits / 2;
    let p = safe_prime(half, PRIME_WINDOWS, rng)?;
    let mut q = safe_prime(half, PRIME_WINDOWS, rng)?;
    let mut retries = 0;
    while q == p {
        retries += 1;
        if retries > 8 {
            return Err(HssError::Setup("could not sample distinct primes".into()));
        }
        q = safe_prime(half, PRIME_WINDOWS, rng)?;
    }
    setup_with_primes(params, &p, &q, rng)
}

/// Key generation from given primes (used for fixed test vectors).
pub fn setup_with_primes(
    params: HssParams,
    p: &BigUint,
    q: &BigUint,
    rng: &mut dyn RngCore,
) -> Result<KeySet> {
    params.validate()?;
    if p == q {
        return Err(HssError::Setup("primes must be distinct".into()));
    }
    let n = p * q;
    if n.bits() != u64::from(params.modulus_bits) {
        return Err(HssError::Setup(format!(
            "modulus has {} bits, profile wants {}",
            n.bits(),
            params.modulus_bits
        )));
    }
    let n2 = &n * &n;
    let two_n = &n << 1;
    let g = loop {
        let a = rng.gen_biguint_range(&BigUint::from(2u32), &n2);
        if !a.gcd(&n).is_one() {
            continue;
        }
        let g = a.modpow(&two_n, &n2);
        if !g.is_one() {
            break g;
        }
    };
    let key_bound = BigUint::one() << params.key_bits;
    let d = loop {
        let d = rng.gen_biguint_below(&key_bound);
        if !d.is_zero() {
            break d;
        }
    };
    let h = g.modpow(&d, &n2);
    let placeholder = ElGamalPair { c0: BigUint::one(), c1: BigUint::one() };
    let mut pk = PublicKey::from_parts(params, n.clone(), g, h, placeholder)?;
    pk.enc_of_d = pk.encrypt_pair(&d, rng);

    // Both shares stay in [0, N) and differ by exactly d over the integers.
    let d0 = rng.gen_biguint_below(&(&n - &key_bound));
    let d1 = &d0 + &d;
    let mut k_prf = [0u8; 16];
    rng.fill_bytes(&mut k_prf);
    Ok(KeySet {
        pk,
        ek0: EvalKey { sigma: 0, d_share: d0, k_prf },
        ek1: EvalKey { sigma: 1, d_share: d1, k_prf },
        escrow: EscrowKey { d },
    })
}

/// Distributed discrete log in the `(1+N)` subgroup.
///
/// Writes `h = h0 + h1·N` and returns `h1 · h0⁻¹ mod N`, so that
/// `ddlog((1+N)^x·u) − ddlog(u) ≡ x (mod N)` for every unit `u`.
pub fn ddlog(h: &BigUint, n: &BigUint) -> Result<BigUint> {
    let (h1, h0) = h.div_rem(n);
    if h1 >= *n {
        return Err(HssError::Decode("element exceeds N²".into()));
    }
    let inv = h0
        .modinv(n)
        .ok_or_else(|| HssError::Conversion("low part not invertible mod N".into()))?;
    Ok((h1 * inv) % n)
}

/// [`ddlog`] of two elements with a single inversion mod N.
pub fn ddlog2(a: &BigUint, b: &BigUint, n: &BigUint) -> Result<(BigUint, BigUint)> {
    let (a1, a0) = a.div_rem(n);
    let (b1, b0) = b.div_rem(n);
    if a1 >= *n || b1 >= *n {
        return Err(HssError::Decode("element exceeds N²".into()));
    }
    let inv = (&a0 * &b0 % n)
        .modinv(n)
        .ok_or_else(|| HssError::Conversion("low part not invertible mod N".into()))?;
    let a0_inv = &inv * &b0 % n;
    let b0_inv = inv * &a0 % n;
    Ok((a1 * a0_inv % n, b1 * b0_inv % n))
}

/// `base^e mod m` for a signed exponent.
fn pow_signed(base: &BigUint, e: &BigInt, m: &BigUint) -> Result<BigUint> {
    let r = base.modpow(e.magnitude(), m);
    if e.is_negative() {
        r.modinv(m).ok_or_else(|| HssError::Decode("group element is not a unit".into()))
    } else {
        Ok(r)
    }
}

impl PublicKey {
    /// Assembles a key from its serialized fields.
    pub fn from_parts(
        params: HssParams,
        n: BigUint,
        g: BigUint,
        h: BigUint,
        enc_of_d: ElGamalPair,
    ) -> Result<Self> {
        let n2 = &n * &n;
        let g_inv = g
            .modinv(&n2)
            .ok_or_else(|| HssError::Decode("generator is not a unit".into()))?;
        Ok(Self { params, n, n2, g, g_inv, h, enc_of_d })
    }

    /// The output modulus; fixed to `N`.
    pub fn n_out(&self) -> &BigUint {
        &self.n
    }

    fn randomness(&self, rng: &mut dyn RngCore) -> BigUint {
        rng.gen_biguint(u64::from(self.params.modulus_bits + self.params.security_bits))
    }

    /// `(1+N)^m mod N²`, computed as `1 + m·N`.
    fn embed(&self, m: &BigUint) -> BigUint {
        (BigUint::one() + (m % &self.n) * &self.n) % &self.n2
    }

    pub fn encrypt_pair(&self, m: &BigUint, rng: &mut dyn RngCore) -> ElGamalPair {
        let r = self.randomness(rng);
        let c0 = self.g_inv.modpow(&r, &self.n2);
        let c1 = self.h.modpow(&r, &self.n2) * self.embed(m) % &self.n2;
        ElGamalPair { c0, c1 }
    }

    fn mul_pairs(&self, a: &ElGamalPair, b: &ElGamalPair) -> ElGamalPair {
        ElGamalPair {
            c0: &a.c0 * &b.c0 % &self.n2,
            c1: &a.c1 * &b.c1 % &self.n2,
        }
    }

    /// Checks every component is a unit below N².
    pub fn check_element(&self, e: &BigUint) -> Result<()> {
        if e.is_zero() || *e >= self.n2 {
            return Err(HssError::Decode("group element out of range".into()));
        }
        if !e.gcd(&self.n).is_one() {
            return Err(HssError::Decode("group element is not a unit".into()));
        }
        Ok(())
    }

    pub fn check_ciphertext(&self, c: &Ciphertext) -> Result<()> {
        c.elements().into_iter().try_for_each(|e| self.check_element(e))
    }
}

impl Encryptor for PublicKey {
    type Ciphertext = Ciphertext;

    fn modulus(&self) -> &BigUint {
        &self.n
    }

    fn input(&self, x: &BigUint, rng: &mut dyn RngCore) -> Result<Ciphertext> {
        if *x >= self.n {
            return Err(HssError::Domain("plaintext must be below N".into()));
        }
        let main = self.encrypt_pair(x, rng);
        let raised = ElGamalPair {
            c0: self.enc_of_d.c0.modpow(x, &self.n2),
            c1: self.enc_of_d.c1.modpow(x, &self.n2),
        };
        let fresh_zero = self.encrypt_pair(&BigUint::zero(), rng);
        Ok(Ciphertext { main, companion: self.mul_pairs(&raised, &fresh_zero) })
    }

    fn add_ct(&self, a: &Ciphertext, b: &Ciphertext) -> Ciphertext {
        Ciphertext {
            main: self.mul_pairs(&a.main, &b.main),
            companion: self.mul_pairs(&a.companion, &b.companion),
        }
    }
}

/// One server's evaluator.
#[derive(Clone, Debug)]
pub struct PaillierEvaluator {
    pk: Arc<PublicKey>,
    ek: EvalKey,
    gates: Arc<GateCounter>,
}

impl PaillierEvaluator {
    pub fn new(pk: Arc<PublicKey>, ek: EvalKey) -> Self {
        Self { pk, ek, gates: Arc::new(GateCounter::new()) }
    }

    pub fn with_counter(pk: Arc<PublicKey>, ek: EvalKey, gates: Arc<GateCounter>) -> Self {
        Self { pk, ek, gates }
    }

    pub fn public_key(&self) -> &PublicKey {
        &self.pk
    }

    pub fn eval_key(&self) -> &EvalKey {
        &self.ek
    }

    pub fn counter(&self) -> Arc<GateCounter> {
        self.gates.clone()
    }

    /// `c1^⟨y⟩ · (g^r)^−⟨d·y⟩ mod N²`; `c0` already holds `g^−r`.
    fn raise_pair(&self, pair: &ElGamalPair, m: &MemoryValue) -> Result<BigUint> {
        let n2 = &self.pk.n2;
        let a = pow_signed(&pair.c1, &m.x_share, n2)?;
        let b = pow_signed(&pair.c0, &m.dx_share, n2)?;
        Ok(a * b % n2)
    }
}

impl Evaluator for PaillierEvaluator {
    type Ciphertext = Ciphertext;
    type Memory = MemoryValue;

    fn sigma(&self) -> u8 {
        self.ek.sigma
    }

    fn modulus(&self) -> &BigUint {
        &self.pk.n
    }

    fn prf_key(&self) -> &[u8; 16] {
        &self.ek.k_prf
    }

    fn gates(&self) -> &GateCounter {
        &self.gates
    }

    fn trivial_one(&self) -> MemoryValue {
        MemoryValue {
            sigma: self.ek.sigma,
            x_share: BigInt::from(self.ek.sigma),
            dx_share: BigInt::from_biguint(Sign::Plus, self.ek.d_share.clone()),
        }
    }

    fn convert_input(&self, c: &Ciphertext) -> Result<MemoryValue> {
        self.mul(c, &self.trivial_one())
    }

    fn mul(&self, c: &Ciphertext, m: &MemoryValue) -> Result<MemoryValue> {
        if m.sigma != self.ek.sigma {
            return Err(HssError::Misuse("memory value belongs to the other server".into()));
        }
        let hx = self.raise_pair(&c.main, m)?;
        let hdx = self.raise_pair(&c.companion, m)?;
        let (x, dx) = ddlog2(&hx, &hdx, &self.pk.n)?;
        self.gates.record_mul();
        Ok(MemoryValue {
            sigma: m.sigma,
            x_share: BigInt::from_biguint(Sign::Plus, x),
            dx_share: BigInt::from_biguint(Sign::Plus, dx),
        })
    }

    fn add_ct(&self, a: &Ciphertext, b: &Ciphertext) -> Ciphertext {
        Encryptor::add_ct(self.pk.as_ref(), a, b)
    }

    fn add(&self, a: &MemoryValue, b: &MemoryValue) -> Result<MemoryValue> {
        a.add(b)
    }

    fn sub(&self, a: &MemoryValue, b: &MemoryValue) -> Result<MemoryValue> {
        a.sub(b)
    }

    fn cmul(&self, c: &BigInt, a: &MemoryValue) -> MemoryValue {
        a.cmul(c)
    }

    fn output(&self, m: &MemoryValue) -> Share {
        Share { sigma: m.sigma, value: super::reduce(&m.x_share, &self.pk.n) }
    }
}

/// Decrypts with the escrowed secret.
#[derive(Clone, Debug)]
pub struct EscrowDecryptor {
    pub pk: Arc<PublicKey>,
    pub escrow: EscrowKey,
}

impl EscrowDecryptor {
    pub fn decrypt_pair(&self, pair: &ElGamalPair) -> Result<BigUint> {
        let pk = &self.pk;
        let unmask = pair.c0.modpow(&self.escrow.d, &pk.n2);
        let u = &pair.c1 * unmask % &pk.n2;
        let (q, r) = (&u - BigUint::one()).div_rem(&pk.n);
        if !r.is_zero() {
            return Err(HssError::Decode("pair does not decrypt into the (1+N) subgroup".into()));
        }
        Ok(q)
    }
}

impl Decryptor for EscrowDecryptor {
    type Ciphertext = Ciphertext;

    fn decrypt(&self, c: &Ciphertext) -> Result<(BigUint, BigUint)> {
        Ok((self.decrypt_pair(&c.main)?, self.decrypt_pair(&c.companion)?))
    }
}

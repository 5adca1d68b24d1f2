//! Cleartext backend with the same instruction set as the Paillier one.
//!
//! Ciphertexts carry their plaintext; every multiplication computes in the
//! clear and re-shares with masks derived from a seed, so both servers get
//! consistent shares without talking. Insecure by construction; only meant
//! as a differential oracle.

use num_bigint::{BigInt, BigUint, Sign};
use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};
use std::fmt;
use std::sync::Arc;

use super::{reduce, Decryptor, Encryptor, Evaluator, GateCounter, MemoryValue, Share};
use crate::error::{HssError, Result};
use num_bigint::RandBigInt;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OracleCiphertext {
    pub x: BigUint,
    pub dx: BigUint,
}

#[derive(Clone, PartialEq, Eq)]
pub struct OracleMemory {
    pub share: MemoryValue,
    pub plain: BigUint,
}

impl fmt::Debug for OracleMemory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OracleM[σ={}, {}]", self.share.sigma, self.plain)
    }
}

#[derive(Clone, Debug)]
struct Shared {
    n: BigUint,
    d: BigUint,
    seed: [u8; 32],
}

/// Plays the role of the public key.
#[derive(Clone, Debug)]
pub struct OracleEncryptor {
    inner: Arc<Shared>,
}

#[derive(Clone, Debug)]
pub struct OracleEvaluator {
    inner: Arc<Shared>,
    sigma: u8,
    k_prf: [u8; 16],
    gates: Arc<GateCounter>,
}

/// Builds the encryptor and both server evaluators over modulus `n`.
pub fn setup(n: BigUint, seed: u64) -> (OracleEncryptor, OracleEvaluator, OracleEvaluator) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let d = rng.gen_biguint_below(&n);
    let mut s = [0u8; 32];
    rng.fill_bytes(&mut s);
    let mut k_prf = [0u8; 16];
    rng.fill_bytes(&mut k_prf);
    let inner = Arc::new(Shared { n, d, seed: s });
    let ev = |sigma| OracleEvaluator {
        inner: inner.clone(),
        sigma,
        k_prf,
        gates: Arc::new(GateCounter::new()),
    };
    (OracleEncryptor { inner: inner.clone() }, ev(0), ev(1))
}

impl Shared {
    fn ciphertext(&self, x: BigUint) -> OracleCiphertext {
        let dx = &x * &self.d % &self.n;
        OracleCiphertext { x, dx }
    }

    /// Deterministic masks from the seed and the operands.
    fn masks(&self, tag: &[u8], c: &BigUint, m: &BigUint) -> (BigUint, BigUint) {
        let mut h = Sha256::new();
        h.update(self.seed);
        h.update(tag);
        for v in [c, m] {
            let bytes = v.to_bytes_be();
            h.update((bytes.len() as u64).to_be_bytes());
            h.update(bytes);
        }
        let mut rng = ChaCha20Rng::from_seed(h.finalize().into());
        (rng.gen_biguint_below(&self.n), rng.gen_biguint_below(&self.n))
    }

    fn share(&self, sigma: u8, plain: BigUint, masks: (BigUint, BigUint)) -> OracleMemory {
        let dz = &plain * &self.d % &self.n;
        let (x_share, dx_share) = if sigma == 0 {
            (masks.0, masks.1)
        } else {
            ((masks.0 + &plain) % &self.n, (masks.1 + dz) % &self.n)
        };
        OracleMemory {
            share: MemoryValue {
                sigma,
                x_share: BigInt::from_biguint(Sign::Plus, x_share),
                dx_share: BigInt::from_biguint(Sign::Plus, dx_share),
            },
            plain,
        }
    }
}

impl Encryptor for OracleEncryptor {
    type Ciphertext = OracleCiphertext;

    fn modulus(&self) -> &BigUint {
        &self.inner.n
    }

    fn input(&self, x: &BigUint, _rng: &mut dyn RngCore) -> Result<OracleCiphertext> {
        if *x >= self.inner.n {
            return Err(HssError::Domain("plaintext must be below N".into()));
        }
        Ok(self.inner.ciphertext(x.clone()))
    }

    fn add_ct(&self, a: &OracleCiphertext, b: &OracleCiphertext) -> OracleCiphertext {
        self.inner.ciphertext((&a.x + &b.x) % &self.inner.n)
    }
}

impl Decryptor for OracleEncryptor {
    type Ciphertext = OracleCiphertext;

    fn decrypt(&self, c: &OracleCiphertext) -> Result<(BigUint, BigUint)> {
        Ok((c.x.clone(), c.dx.clone()))
    }
}

impl OracleEvaluator {
    pub fn counter(&self) -> Arc<GateCounter> {
        self.gates.clone()
    }
}

impl Evaluator for OracleEvaluator {
    type Ciphertext = OracleCiphertext;
    type Memory = OracleMemory;

    fn sigma(&self) -> u8 {
        self.sigma
    }

    fn modulus(&self) -> &BigUint {
        &self.inner.n
    }

    fn prf_key(&self) -> &[u8; 16] {
        &self.k_prf
    }

    fn gates(&self) -> &GateCounter {
        &self.gates
    }

    fn trivial_one(&self) -> OracleMemory {
        let one = BigUint::from(1u32);
        let masks = self.inner.masks(b"one", &one, &one);
        self.inner.share(self.sigma, one, masks)
    }

    fn convert_input(&self, c: &OracleCiphertext) -> Result<OracleMemory> {
        self.mul(c, &self.trivial_one())
    }

    fn mul(&self, c: &OracleCiphertext, m: &OracleMemory) -> Result<OracleMemory> {
        if m.share.sigma != self.sigma {
            return Err(HssError::Misuse("memory value belongs to the other server".into()));
        }
        let z = &c.x * &m.plain % &self.inner.n;
        let masks = self.inner.masks(b"mul", &c.x, &m.plain);
        self.gates.record_mul();
        Ok(self.inner.share(self.sigma, z, masks))
    }

    fn add_ct(&self, a: &OracleCiphertext, b: &OracleCiphertext) -> OracleCiphertext {
        self.inner.ciphertext((&a.x + &b.x) % &self.inner.n)
    }

    fn add(&self, a: &OracleMemory, b: &OracleMemory) -> Result<OracleMemory> {
        Ok(OracleMemory {
            share: a.share.add(&b.share)?,
            plain: (&a.plain + &b.plain) % &self.inner.n,
        })
    }

    fn sub(&self, a: &OracleMemory, b: &OracleMemory) -> Result<OracleMemory> {
        Ok(OracleMemory {
            share: a.share.sub(&b.share)?,
            plain: (&a.plain + &self.inner.n - &b.plain) % &self.inner.n,
        })
    }

    fn cmul(&self, c: &BigInt, a: &OracleMemory) -> OracleMemory {
        let cm = reduce(c, &self.inner.n);
        OracleMemory { share: a.share.cmul(c), plain: cm * &a.plain % &self.inner.n }
    }

    fn output(&self, m: &OracleMemory) -> Share {
        Share { sigma: m.share.sigma, value: reduce(&m.share.x_share, &self.inner.n) }
    }
}

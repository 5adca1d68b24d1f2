//! Safe-prime generation (p = 2p' + 1 with p' prime).

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::RngCore;

use crate::error::{HssError, Result};

const SIEVE_LIMIT: u32 = 4096;
const MR_ROUNDS: usize = 24;
/// Candidates examined from one random starting point before resampling.
const WINDOW: u32 = 1 << 16;

fn small_primes() -> &'static [u32] {
    use std::sync::OnceLock;
    static PRIMES: OnceLock<Vec<u32>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let mut sieve = vec![true; SIEVE_LIMIT as usize];
        let mut out = Vec::new();
        for i in 2..SIEVE_LIMIT as usize {
            if sieve[i] {
                out.push(i as u32);
                let mut j = i * i;
                while j < SIEVE_LIMIT as usize {
                    sieve[j] = false;
                    j += i;
                }
            }
        }
        out
    })
}

/// Miller-Rabin with `rounds` random bases plus base 2.
pub fn is_probable_prime(n: &BigUint, rounds: usize, rng: &mut dyn RngCore) -> bool {
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    for &p in small_primes() {
        let p = BigUint::from(p);
        if *n == p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }
    let n_minus_one = n - 1u32;
    let s = n_minus_one.trailing_zeros().unwrap_or(0);
    let d = &n_minus_one >> s;
    let witness = |a: &BigUint| -> bool {
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_one {
            return true;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_one {
                return true;
            }
        }
        false
    };
    if !witness(&two) {
        return false;
    }
    let upper = n - 2u32;
    for _ in 0..rounds {
        let a = rng.gen_biguint_range(&two, &upper);
        if !witness(&a) {
            return false;
        }
    }
    true
}

/// Samples a safe prime of exactly `bits` bits.
///
/// Gives up after `max_windows` random starting points.
pub fn safe_prime(bits: u32, max_windows: u32, rng: &mut dyn RngCore) -> Result<BigUint> {
    if bits < 16 {
        return Err(HssError::Setup(format!("safe prime of {bits} bits requested")));
    }
    let primes = small_primes();
    for _ in 0..max_windows {
        // p' has bits-1 bits with the top two set so that 2p'+1 keeps `bits` bits.
        let mut q = rng.gen_biguint(u64::from(bits - 1));
        q.set_bit(u64::from(bits - 2), true);
        q.set_bit(u64::from(bits - 3), true);
        q.set_bit(0, true);
        let residues: Vec<u32> = primes.iter().map(|&s| (&q % s).to_u32().unwrap()).collect();
        for step in 0..WINDOW {
            let offset = 2 * step;
            let sieved = primes.iter().zip(&residues).all(|(&s, &r)| {
                let r = (r + offset % s) % s;
                // q' ≠ 0 and 2q'+1 ≠ 0 (mod s)
                r != 0 && (2 * r + 1) % s != 0
            });
            if !sieved {
                continue;
            }
            let cand = &q + offset;
            let p = (&cand << 1u32) + 1u32;
            if p.bits() != u64::from(bits) {
                break;
            }
            // Cheap Fermat filter on p before full tests.
            if !BigUint::from(2u32).modpow(&(&p - 1u32), &p).is_one() {
                continue;
            }
            if is_probable_prime(&cand, MR_ROUNDS, rng) && is_probable_prime(&p, MR_ROUNDS, rng) {
                return Ok(p);
            }
        }
    }
    Err(HssError::Setup(format!("no {bits}-bit safe prime found after {max_windows} windows")))
}

/// True when `p` is prime and `(p-1)/2` is prime.
pub fn is_safe_prime(p: &BigUint, rng: &mut dyn RngCore) -> bool {
    if p.is_even() {
        return false;
    }
    let q = (p - 1u32) >> 1;
    is_probable_prime(p, MR_ROUNDS, rng) && is_probable_prime(&q, MR_ROUNDS, rng)
}

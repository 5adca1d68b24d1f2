//! Library side of the `hsstree` command: key files, model sources, the
//! benchmark harness and metrics rendering.

pub mod bench;
pub mod keys;
pub mod model;
pub mod report;
pub mod session;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Deterministic with a seed, OS entropy without one.
pub fn seeded_rng(seed: Option<u64>) -> ChaCha20Rng {
    match seed {
        Some(s) => ChaCha20Rng::seed_from_u64(s),
        None => ChaCha20Rng::from_entropy(),
    }
}

/// Median of a sample; 0 for an empty one.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    }
}

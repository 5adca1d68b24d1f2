//! Key generation and the key directory layout.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hsstree_core::hss::fixtures::default_profile_primes;
use hsstree_core::hss::paillier::{self, EscrowKey, EvalKey, KeySet, PublicKey};
use hsstree_core::wire::{
    decode_escrow_key, decode_eval_key, decode_public_key, encode_escrow_key, encode_eval_key, encode_public_key,
};
use hsstree_core::Profile;

use crate::seeded_rng;

pub const PUBLIC_KEY: &str = "pk.bin";
pub const EVAL_KEYS: [&str; 2] = ["ek0.bin", "ek1.bin"];
pub const ESCROW_KEY: &str = "escrow.bin";

/// Runs setup. `fixture_primes` swaps the safe-prime search for the
/// built-in 3072-bit primes and is only accepted for the default profile.
pub fn generate(profile: Profile, seed: Option<u64>, fixture_primes: bool) -> Result<KeySet> {
    let mut rng = seeded_rng(seed);
    let params = profile.params();
    let ks = if fixture_primes {
        if profile != Profile::Default {
            bail!("fixture primes exist only for the default profile");
        }
        let (p, q) = default_profile_primes();
        paillier::setup_with_primes(params, &p, &q, &mut rng)?
    } else {
        paillier::setup(params, &mut rng)?
    };
    Ok(ks)
}

pub fn profile_of(pk: &PublicKey) -> Option<Profile> {
    [Profile::Toy, Profile::Test, Profile::Default].into_iter().find(|p| p.params() == pk.params)
}

/// Writes pk, both evaluation keys and, for escrow profiles, the secret.
pub fn write_keys(dir: &Path, ks: &KeySet, profile: Profile) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("create {}", dir.display()))?;
    let mut files = vec![
        (dir.join(PUBLIC_KEY), encode_public_key(&ks.pk)),
        (dir.join(EVAL_KEYS[0]), encode_eval_key(&ks.ek0)),
        (dir.join(EVAL_KEYS[1]), encode_eval_key(&ks.ek1)),
    ];
    if profile.escrow() {
        files.push((dir.join(ESCROW_KEY), encode_escrow_key(&ks.escrow)));
    }
    for (path, bytes) in &files {
        fs::write(path, bytes).with_context(|| format!("write {}", path.display()))?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("read {}", path.display()))
}

pub fn read_public(dir: &Path) -> Result<PublicKey> {
    let path = dir.join(PUBLIC_KEY);
    decode_public_key(&read(&path)?).with_context(|| format!("decode {}", path.display()))
}

pub fn read_eval(dir: &Path, sigma: u8) -> Result<EvalKey> {
    let path = dir.join(EVAL_KEYS.get(sigma as usize).context("role must be 0 or 1")?);
    let ek = decode_eval_key(&read(&path)?).with_context(|| format!("decode {}", path.display()))?;
    if ek.sigma != sigma {
        bail!("{} holds the key of server {}", path.display(), ek.sigma);
    }
    Ok(ek)
}

pub fn read_escrow(dir: &Path) -> Result<Option<EscrowKey>> {
    let path = dir.join(ESCROW_KEY);
    if !path.exists() {
        return Ok(None);
    }
    Ok(Some(decode_escrow_key(&read(&path)?).with_context(|| format!("decode {}", path.display()))?))
}

/// Reassembles a full key set; needs both evaluation keys.
pub fn read_keyset(dir: &Path) -> Result<KeySet> {
    let pk = read_public(dir)?;
    let (ek0, ek1) = (read_eval(dir, 0)?, read_eval(dir, 1)?);
    let escrow = read_escrow(dir)?.unwrap_or(EscrowKey { d: &ek1.d_share - &ek0.d_share });
    Ok(KeySet { pk, ek0, ek1, escrow })
}

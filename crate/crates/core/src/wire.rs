//! Canonical binary encodings.
//!
//! Every blob starts with a 4-byte magic and a 1-byte version, followed by
//! the modulus size so that fixed field widths can be derived:
//! group elements mod N² take `⌈2·modulus_bits/8⌉` bytes, shares mod N take
//! `⌈modulus_bits/8⌉` bytes, all big-endian. Counts are `u32` big-endian.
//! Decoding is strict: truncation, trailing bytes, out-of-range elements
//! and unknown tags are errors.

use num_bigint::BigUint;

use crate::compare::BitCiphertextVector;
use crate::error::{HssError, Result};
use crate::hss::paillier::{Ciphertext, ElGamalPair, EscrowKey, EvalKey, PublicKey};
use crate::params::HssParams;
use crate::protocol::{
    ClientQuery, EncryptedModel, EncryptedTest, EncryptedTree, GbdtCiphertexts, LeafShare, Mode,
    ServerResponse,
};

pub const VERSION: u8 = 1;

pub const MAGIC_PUBLIC_KEY: [u8; 4] = *b"HTPK";
pub const MAGIC_EVAL_KEY: [u8; 4] = *b"HTEK";
pub const MAGIC_ESCROW_KEY: [u8; 4] = *b"HTDK";
pub const MAGIC_MODEL: [u8; 4] = *b"HTEM";
pub const MAGIC_FEATURE_MAP: [u8; 4] = *b"HTFM";
pub const MAGIC_QUERY: [u8; 4] = *b"HTCQ";
pub const MAGIC_RESPONSE: [u8; 4] = *b"HTSR";

/// Largest modulus a decoder accepts.
const MAX_MODULUS_BITS: u32 = 16384;

fn decode_err(msg: impl Into<String>) -> HssError {
    HssError::Decode(msg.into())
}

/// Field widths for one modulus size.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Widths {
    pub modulus_bits: u32,
}

impl Widths {
    pub fn new(modulus_bits: u32) -> Result<Self> {
        if modulus_bits == 0 || modulus_bits > MAX_MODULUS_BITS {
            return Err(decode_err(format!("modulus size {modulus_bits} not supported")));
        }
        Ok(Self { modulus_bits })
    }

    pub fn element(&self) -> usize {
        (2 * self.modulus_bits as usize).div_ceil(8)
    }

    pub fn share(&self) -> usize {
        (self.modulus_bits as usize).div_ceil(8)
    }

    pub fn ciphertext(&self) -> usize {
        4 * self.element()
    }
}

pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new(magic: [u8; 4]) -> Self {
        let mut buf = Vec::with_capacity(1024);
        buf.extend_from_slice(&magic);
        buf.push(VERSION);
        Self { buf }
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    pub fn count(&mut self, v: usize) {
        self.u32(u32::try_from(v).expect("count fits in u32"));
    }

    pub fn bytes(&mut self, v: &[u8]) {
        self.buf.extend_from_slice(v);
    }

    /// Left-padded to `width` bytes.
    pub fn fixed(&mut self, v: &BigUint, width: usize) {
        let raw = v.to_bytes_be();
        let raw: &[u8] = if v.bits() == 0 { &[] } else { &raw };
        assert!(raw.len() <= width, "value wider than its field");
        self.buf.resize(self.buf.len() + width - raw.len(), 0);
        self.buf.extend_from_slice(raw);
    }

    /// `u32` length followed by minimal big-endian bytes.
    pub fn var(&mut self, v: &BigUint) {
        let raw = if v.bits() == 0 { Vec::new() } else { v.to_bytes_be() };
        self.count(raw.len());
        self.bytes(&raw);
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8], magic: [u8; 4]) -> Result<Self> {
        let mut r = Self { buf, pos: 0 };
        if r.take(4)? != magic {
            return Err(decode_err("magic mismatch"));
        }
        let version = r.u8()?;
        if version != VERSION {
            return Err(decode_err(format!("unsupported version {version}")));
        }
        Ok(r)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(decode_err("truncated input"));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    /// A count of items of at least `min_item` bytes each; bounded by the
    /// remaining input so corrupt counts cannot trigger large allocations.
    pub fn count(&mut self, min_item: usize) -> Result<usize> {
        let c = self.u32()? as usize;
        if c.saturating_mul(min_item.max(1)) > self.remaining() {
            return Err(decode_err(format!("count {c} exceeds the remaining input")));
        }
        Ok(c)
    }

    pub fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    pub fn fixed(&mut self, width: usize) -> Result<BigUint> {
        Ok(BigUint::from_bytes_be(self.take(width)?))
    }

    pub fn var(&mut self) -> Result<BigUint> {
        let len = self.count(1)?;
        let raw = self.take(len)?;
        if raw.first() == Some(&0) {
            return Err(decode_err("non-minimal integer encoding"));
        }
        Ok(BigUint::from_bytes_be(raw))
    }

    pub fn finish(self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(decode_err(format!("{} trailing bytes", self.buf.len() - self.pos)));
        }
        Ok(())
    }
}

fn write_params(w: &mut Writer, p: &HssParams) {
    w.u32(p.security_bits);
    w.u32(p.modulus_bits);
    w.u32(p.t_bits);
    w.u32(p.key_bits);
}

fn read_params(r: &mut Reader<'_>) -> Result<HssParams> {
    let p = HssParams {
        security_bits: r.u32()?,
        modulus_bits: r.u32()?,
        t_bits: r.u32()?,
        key_bits: r.u32()?,
    };
    Widths::new(p.modulus_bits)?;
    p.validate().map_err(|e| decode_err(e.to_string()))?;
    Ok(p)
}

fn read_element(r: &mut Reader<'_>, w: &Widths) -> Result<BigUint> {
    let e = r.fixed(w.element())?;
    if e.bits() > 2 * u64::from(w.modulus_bits) {
        return Err(decode_err("group element wider than N²"));
    }
    Ok(e)
}

fn read_share(r: &mut Reader<'_>, w: &Widths) -> Result<BigUint> {
    let s = r.fixed(w.share())?;
    if s.bits() > u64::from(w.modulus_bits) {
        return Err(decode_err("share wider than N"));
    }
    Ok(s)
}

pub fn write_ciphertext(w: &mut Writer, c: &Ciphertext, widths: &Widths) {
    for e in c.elements() {
        w.fixed(e, widths.element());
    }
}

pub fn read_ciphertext(r: &mut Reader<'_>, widths: &Widths) -> Result<Ciphertext> {
    let mut pair = || -> Result<ElGamalPair> {
        Ok(ElGamalPair { c0: read_element(r, widths)?, c1: read_element(r, widths)? })
    };
    let main = pair()?;
    let companion = pair()?;
    Ok(Ciphertext { main, companion })
}

/// A bare ciphertext, no header: exactly `4·⌈2·modulus_bits/8⌉` bytes.
pub fn ciphertext_to_bytes(c: &Ciphertext, modulus_bits: u32) -> Result<Vec<u8>> {
    let widths = Widths::new(modulus_bits)?;
    let mut w = Writer { buf: Vec::with_capacity(widths.ciphertext()) };
    write_ciphertext(&mut w, c, &widths);
    Ok(w.buf)
}

pub fn ciphertext_from_bytes(bytes: &[u8], modulus_bits: u32) -> Result<Ciphertext> {
    let widths = Widths::new(modulus_bits)?;
    let mut r = Reader { buf: bytes, pos: 0 };
    let c = read_ciphertext(&mut r, &widths)?;
    r.finish()?;
    Ok(c)
}

// ---------------------------------------------------------------------------
// keys

pub fn encode_public_key(pk: &PublicKey) -> Vec<u8> {
    let mut w = Writer::new(MAGIC_PUBLIC_KEY);
    write_params(&mut w, &pk.params);
    for v in [&pk.n, &pk.g, &pk.h, &pk.enc_of_d.c0, &pk.enc_of_d.c1] {
        w.var(v);
    }
    w.finish()
}

pub fn decode_public_key(bytes: &[u8]) -> Result<PublicKey> {
    let mut r = Reader::new(bytes, MAGIC_PUBLIC_KEY)?;
    let params = read_params(&mut r)?;
    let n = r.var()?;
    let g = r.var()?;
    let h = r.var()?;
    let enc_of_d = ElGamalPair { c0: r.var()?, c1: r.var()? };
    r.finish()?;
    if n.bits() != u64::from(params.modulus_bits) {
        return Err(decode_err("modulus size disagrees with the parameters"));
    }
    let pk = PublicKey::from_parts(params, n, g, h, enc_of_d)?;
    for e in [&pk.g, &pk.h, &pk.enc_of_d.c0, &pk.enc_of_d.c1] {
        pk.check_element(e)?;
    }
    Ok(pk)
}

pub fn encode_eval_key(ek: &EvalKey) -> Vec<u8> {
    let mut w = Writer::new(MAGIC_EVAL_KEY);
    w.u8(ek.sigma);
    w.var(&ek.d_share);
    w.bytes(&ek.k_prf);
    w.finish()
}

pub fn decode_eval_key(bytes: &[u8]) -> Result<EvalKey> {
    let mut r = Reader::new(bytes, MAGIC_EVAL_KEY)?;
    let sigma = r.u8()?;
    if sigma > 1 {
        return Err(decode_err(format!("server index {sigma}")));
    }
    let d_share = r.var()?;
    let k_prf = r.array::<16>()?;
    r.finish()?;
    Ok(EvalKey { sigma, d_share, k_prf })
}

pub fn encode_escrow_key(k: &EscrowKey) -> Vec<u8> {
    let mut w = Writer::new(MAGIC_ESCROW_KEY);
    w.var(&k.d);
    w.finish()
}

pub fn decode_escrow_key(bytes: &[u8]) -> Result<EscrowKey> {
    let mut r = Reader::new(bytes, MAGIC_ESCROW_KEY)?;
    let d = r.var()?;
    r.finish()?;
    Ok(EscrowKey { d })
}

// ---------------------------------------------------------------------------
// protocol payloads

const TEST_THRESHOLD: u8 = 0;
const TEST_MEMBER: u8 = 1;

fn write_bits(w: &mut Writer, v: &BitCiphertextVector<Ciphertext>, widths: &Widths) {
    for c in &v.bits {
        write_ciphertext(w, c, widths);
    }
}

fn read_bits(r: &mut Reader<'_>, t: u32, widths: &Widths) -> Result<BitCiphertextVector<Ciphertext>> {
    if (t as usize).saturating_mul(widths.ciphertext()) > r.remaining() {
        return Err(decode_err("truncated bit vector"));
    }
    let bits = (0..t).map(|_| read_ciphertext(r, widths)).collect::<Result<Vec<_>>>()?;
    Ok(BitCiphertextVector { bits })
}

fn read_shape(r: &mut Reader<'_>) -> Result<(u32, usize, u32)> {
    let h = u32::from(r.u8()?);
    let n = r.u32()? as usize;
    let t = r.u32()?;
    if h == 0 || h > 30 || n == 0 || t == 0 || t > 64 {
        return Err(decode_err(format!("tree shape h={h}, n={n}, t={t} invalid")));
    }
    Ok((h, n, t))
}

fn write_matrix(w: &mut Writer, cm: &[Vec<Ciphertext>], widths: &Widths) {
    for row in cm {
        for c in row {
            write_ciphertext(w, c, widths);
        }
    }
}

fn read_matrix(r: &mut Reader<'_>, m: usize, n: usize, widths: &Widths) -> Result<Vec<Vec<Ciphertext>>> {
    if m.saturating_mul(n).saturating_mul(widths.ciphertext()) > r.remaining() {
        return Err(decode_err("truncated feature map"));
    }
    (0..m)
        .map(|_| (0..n).map(|_| read_ciphertext(r, widths)).collect())
        .collect()
}

pub fn encode_model(model: &EncryptedModel<Ciphertext>, modulus_bits: u32) -> Result<Vec<u8>> {
    let widths = Widths::new(modulus_bits)?;
    model.validate()?;
    let mut w = Writer::new(MAGIC_MODEL);
    w.u32(modulus_bits);
    w.u32(model.frac_bits);
    w.count(model.trees.len());
    w.u8(u8::from(model.gbdt.is_some()));
    for tree in &model.trees {
        w.u8(tree.h as u8);
        w.count(tree.n);
        w.u32(tree.t);
        for test in &tree.tests {
            match test {
                EncryptedTest::Threshold(y) => {
                    w.u8(TEST_THRESHOLD);
                    write_bits(&mut w, y, &widths);
                }
                EncryptedTest::Member(set) => {
                    w.u8(TEST_MEMBER);
                    w.count(set.len());
                    for s in set {
                        write_bits(&mut w, s, &widths);
                    }
                }
            }
        }
        for c in &tree.cv {
            write_ciphertext(&mut w, c, &widths);
        }
        write_matrix(&mut w, &tree.cm, &widths);
    }
    if let Some(g) = &model.gbdt {
        write_ciphertext(&mut w, &g.c_eta, &widths);
        write_ciphertext(&mut w, &g.c_t0, &widths);
    }
    Ok(w.finish())
}

/// Returns the model and the modulus size it was encoded for.
pub fn decode_model(bytes: &[u8]) -> Result<(EncryptedModel<Ciphertext>, u32)> {
    let mut r = Reader::new(bytes, MAGIC_MODEL)?;
    let widths = Widths::new(r.u32()?)?;
    let frac_bits = r.u32()?;
    let count = r.count(widths.ciphertext())?;
    let gbdt_flag = r.u8()?;
    if gbdt_flag > 1 {
        return Err(decode_err("bad ensemble flag"));
    }
    let mut trees = Vec::with_capacity(count);
    for _ in 0..count {
        let (h, n, t) = read_shape(&mut r)?;
        let m = (1usize << h) - 1;
        let k = 1usize << h;
        if m.saturating_mul(widths.ciphertext()) > r.remaining() {
            return Err(decode_err("truncated tree"));
        }
        let mut tests = Vec::with_capacity(m);
        for _ in 0..m {
            tests.push(match r.u8()? {
                TEST_THRESHOLD => EncryptedTest::Threshold(read_bits(&mut r, t, &widths)?),
                TEST_MEMBER => {
                    let len = r.count(widths.ciphertext())?;
                    EncryptedTest::Member(
                        (0..len).map(|_| read_bits(&mut r, t, &widths)).collect::<Result<Vec<_>>>()?,
                    )
                }
                other => return Err(decode_err(format!("unknown node kind {other}"))),
            });
        }
        if k.saturating_mul(widths.ciphertext()) > r.remaining() {
            return Err(decode_err("truncated labels"));
        }
        let cv = (0..k).map(|_| read_ciphertext(&mut r, &widths)).collect::<Result<Vec<_>>>()?;
        let cm = read_matrix(&mut r, m, n, &widths)?;
        trees.push(EncryptedTree { h, n, t, tests, cv, cm });
    }
    let gbdt = if gbdt_flag == 1 {
        Some(GbdtCiphertexts { c_eta: read_ciphertext(&mut r, &widths)?, c_t0: read_ciphertext(&mut r, &widths)? })
    } else {
        None
    };
    r.finish()?;
    let model = EncryptedModel { frac_bits, trees, gbdt };
    model.validate().map_err(|e| decode_err(e.to_string()))?;
    Ok((model, widths.modulus_bits))
}

/// The client download: every tree's encrypted one-hot map and its shape.
pub fn encode_feature_maps(model: &EncryptedModel<Ciphertext>, modulus_bits: u32) -> Result<Vec<u8>> {
    let widths = Widths::new(modulus_bits)?;
    let mut w = Writer::new(MAGIC_FEATURE_MAP);
    w.u32(modulus_bits);
    w.u32(model.frac_bits);
    w.u8(u8::from(model.gbdt.is_some()));
    w.count(model.trees.len());
    for tree in &model.trees {
        w.u8(tree.h as u8);
        w.count(tree.n);
        w.u32(tree.t);
        write_matrix(&mut w, &tree.cm, &widths);
    }
    Ok(w.finish())
}

/// A downloaded feature map: per tree `(h, n, t, cm)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureMaps {
    pub modulus_bits: u32,
    pub frac_bits: u32,
    /// The model is an ensemble and must be queried in gbdt mode.
    pub gbdt: bool,
    pub trees: Vec<(u32, usize, u32, Vec<Vec<Ciphertext>>)>,
}

impl FeatureMaps {
    pub fn maps(&self) -> Vec<&Vec<Vec<Ciphertext>>> {
        self.trees.iter().map(|t| &t.3).collect()
    }

    pub fn t(&self) -> u32 {
        self.trees[0].2
    }

    pub fn n(&self) -> usize {
        self.trees[0].1
    }
}

pub fn decode_feature_maps(bytes: &[u8]) -> Result<FeatureMaps> {
    let mut r = Reader::new(bytes, MAGIC_FEATURE_MAP)?;
    let widths = Widths::new(r.u32()?)?;
    let frac_bits = r.u32()?;
    let gbdt = match r.u8()? {
        0 => false,
        1 => true,
        other => return Err(decode_err(format!("bad ensemble flag {other}"))),
    };
    let count = r.count(widths.ciphertext())?;
    if count == 0 || (!gbdt && count != 1) {
        return Err(decode_err("tree count does not match the model kind"));
    }
    let mut trees = Vec::with_capacity(count);
    for _ in 0..count {
        let (h, n, t) = read_shape(&mut r)?;
        let cm = read_matrix(&mut r, (1usize << h) - 1, n, &widths)?;
        trees.push((h, n, t, cm));
    }
    r.finish()?;
    Ok(FeatureMaps { modulus_bits: widths.modulus_bits, frac_bits, gbdt, trees })
}

pub fn encode_query(q: &ClientQuery<Ciphertext>, modulus_bits: u32) -> Result<Vec<u8>> {
    let widths = Widths::new(modulus_bits)?;
    let mut w = Writer::new(MAGIC_QUERY);
    w.u32(modulus_bits);
    w.u8(q.mode.tag());
    w.bytes(&q.nonce);
    w.count(q.cmx.len());
    for rows in &q.cmx {
        w.count(rows.len());
        let t = rows.first().map_or(0, |r| r.width());
        w.count(t);
        for row in rows {
            if row.width() != t {
                return Err(HssError::Domain("ragged query rows".into()));
            }
            write_bits(&mut w, row, &widths);
        }
    }
    match &q.c_a {
        Some(c) => {
            w.u8(1);
            write_ciphertext(&mut w, c, &widths);
        }
        None => w.u8(0),
    }
    Ok(w.finish())
}

pub fn decode_query(bytes: &[u8]) -> Result<(ClientQuery<Ciphertext>, u32)> {
    let mut r = Reader::new(bytes, MAGIC_QUERY)?;
    let widths = Widths::new(r.u32()?)?;
    let mode = Mode::from_tag(r.u8()?).ok_or_else(|| decode_err("unknown mode"))?;
    let nonce = r.array::<16>()?;
    let trees = r.count(widths.ciphertext())?;
    if trees == 0 {
        return Err(decode_err("query without trees"));
    }
    let mut cmx = Vec::with_capacity(trees);
    for _ in 0..trees {
        let m = r.count(widths.ciphertext())?;
        let t = r.count(0)?;
        if m == 0 || t == 0 || t > 64 || m.saturating_mul(t).saturating_mul(widths.ciphertext()) > r.remaining() {
            return Err(decode_err("query dimensions invalid"));
        }
        cmx.push((0..m).map(|_| read_bits(&mut r, t as u32, &widths)).collect::<Result<Vec<_>>>()?);
    }
    let c_a = match r.u8()? {
        0 => None,
        1 => Some(read_ciphertext(&mut r, &widths)?),
        _ => return Err(decode_err("bad MAC key flag")),
    };
    r.finish()?;
    Ok((ClientQuery { mode, cmx, c_a, nonce }, widths.modulus_bits))
}

pub fn encode_response(resp: &ServerResponse, modulus_bits: u32) -> Result<Vec<u8>> {
    let widths = Widths::new(modulus_bits)?;
    let with_w = resp.mode.needs_mac_key();
    let mut w = Writer::new(MAGIC_RESPONSE);
    w.u32(modulus_bits);
    w.u8(resp.sigma);
    w.u8(resp.mode.tag());
    w.count(resp.trees.len());
    for tree in &resp.trees {
        w.count(tree.len());
        for leaf in tree {
            if leaf.w.is_some() != with_w {
                return Err(HssError::Domain("MAC share presence disagrees with the mode".into()));
            }
            w.fixed(&leaf.pc, widths.share());
            w.fixed(&leaf.v, widths.share());
            if let Some(mac) = &leaf.w {
                w.fixed(mac, widths.share());
            }
        }
    }
    match (&resp.t0, resp.mode) {
        (Some((t0, proof)), Mode::Gbdt) => {
            w.fixed(t0, widths.share());
            w.fixed(proof, widths.share());
        }
        (None, Mode::Plain | Mode::Verifiable) => {}
        _ => return Err(HssError::Domain("T0 shares disagree with the mode".into())),
    }
    Ok(w.finish())
}

pub fn decode_response(bytes: &[u8]) -> Result<(ServerResponse, u32)> {
    let mut r = Reader::new(bytes, MAGIC_RESPONSE)?;
    let widths = Widths::new(r.u32()?)?;
    let sigma = r.u8()?;
    if sigma > 1 {
        return Err(decode_err(format!("server index {sigma}")));
    }
    let mode = Mode::from_tag(r.u8()?).ok_or_else(|| decode_err("unknown mode"))?;
    let with_w = mode.needs_mac_key();
    let per_leaf = widths.share() * if with_w { 3 } else { 2 };
    let count = r.count(4)?;
    let mut trees = Vec::with_capacity(count);
    for _ in 0..count {
        let k = r.count(per_leaf)?;
        let leaves = (0..k)
            .map(|_| {
                Ok(LeafShare {
                    pc: read_share(&mut r, &widths)?,
                    v: read_share(&mut r, &widths)?,
                    w: if with_w { Some(read_share(&mut r, &widths)?) } else { None },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        trees.push(leaves);
    }
    let t0 = if mode == Mode::Gbdt {
        Some((read_share(&mut r, &widths)?, read_share(&mut r, &widths)?))
    } else {
        None
    };
    r.finish()?;
    Ok((ServerResponse { sigma, mode, trees, t0 }, widths.modulus_bits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hss::paillier::setup;
    use crate::params::Profile;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn fixed_width_padding() {
        let mut w = Writer::new(*b"TEST");
        w.fixed(&BigUint::from(0x0102u32), 4);
        w.fixed(&BigUint::from(0u32), 2);
        assert_eq!(w.finish(), vec![b'T', b'E', b'S', b'T', VERSION, 0, 0, 1, 2, 0, 0]);
    }

    #[test]
    fn ciphertext_width() {
        let ks = setup(Profile::Toy.params(), &mut ChaCha20Rng::seed_from_u64(1)).unwrap();
        let c = crate::hss::Encryptor::input_u64(&ks.pk, 5, &mut ChaCha20Rng::seed_from_u64(2)).unwrap();
        let bytes = ciphertext_to_bytes(&c, 192).unwrap();
        assert_eq!(bytes.len(), 4 * 48);
        assert_eq!(ciphertext_from_bytes(&bytes, 192).unwrap(), c);
        assert!(ciphertext_from_bytes(&bytes[1..], 192).is_err());
    }

    #[test]
    fn keys_round_trip() {
        let ks = setup(Profile::Toy.params(), &mut ChaCha20Rng::seed_from_u64(3)).unwrap();
        let pk = encode_public_key(&ks.pk);
        assert_eq!(decode_public_key(&pk).unwrap(), ks.pk);
        assert_eq!(decode_eval_key(&encode_eval_key(&ks.ek1)).unwrap(), ks.ek1);
        assert_eq!(decode_escrow_key(&encode_escrow_key(&ks.escrow)).unwrap(), ks.escrow);
        let mut bad = pk.clone();
        bad[4] = 9;
        assert!(decode_public_key(&bad).is_err());
        assert!(decode_public_key(&pk[..pk.len() - 1]).is_err());
        assert!(decode_eval_key(&pk).is_err());
    }

    #[test]
    fn empty_query_is_rejected() {
        assert!(decode_query(&[]).is_err());
        let mut w = Writer::new(MAGIC_QUERY);
        w.u32(192);
        assert!(decode_query(&w.finish()).is_err());
    }
}

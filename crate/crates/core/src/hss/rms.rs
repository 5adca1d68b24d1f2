//! Straight-line RMS programs: a representation, a plaintext interpreter
//! and a random generator, used to compare backends.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};
use rand::Rng;

use super::{fits_payload, Encryptor, Evaluator, Share};
use crate::error::{HssError, Result};

/// Operands name input slots (`ct`) or memory registers (`mem`).
/// Every instruction appends one new input or register.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Instr {
    /// New input slot `ct[a] + ct[b]`.
    AddCt { a: usize, b: usize },
    Convert { ct: usize },
    Mul { ct: usize, mem: usize },
    Add { a: usize, b: usize },
    Sub { a: usize, b: usize },
    CMul { c: i64, mem: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub inputs: Vec<BigInt>,
    pub instrs: Vec<Instr>,
    /// Registers to output.
    pub outputs: Vec<usize>,
}

impl Program {
    pub fn gates(&self) -> usize {
        self.instrs
            .iter()
            .filter(|i| matches!(i, Instr::Convert { .. } | Instr::Mul { .. }))
            .count()
    }

    /// Plaintext value of every output register, over the integers.
    pub fn eval_plain(&self) -> Vec<BigInt> {
        let mut cts = self.inputs.clone();
        let mut mem: Vec<BigInt> = vec![BigInt::one()];
        for instr in &self.instrs {
            match instr {
                Instr::AddCt { a, b } => cts.push(&cts[*a] + &cts[*b]),
                Instr::Convert { ct } => mem.push(cts[*ct].clone()),
                Instr::Mul { ct, mem: m } => mem.push(&cts[*ct] * &mem[*m]),
                Instr::Add { a, b } => mem.push(&mem[*a] + &mem[*b]),
                Instr::Sub { a, b } => mem.push(&mem[*a] - &mem[*b]),
                Instr::CMul { c, mem: m } => mem.push(BigInt::from(*c) * &mem[*m]),
            }
        }
        self.outputs.iter().map(|&o| mem[o].clone()).collect()
    }

    /// Runs the program on one server. Register 0 is the constant 1.
    pub fn run<E: Evaluator>(&self, ev: &E, inputs: &[E::Ciphertext]) -> Result<Vec<Share>> {
        if inputs.len() != self.inputs.len() {
            return Err(HssError::Domain("input count mismatch".into()));
        }
        let mut cts = inputs.to_vec();
        let mut mem = vec![ev.trivial_one()];
        for instr in &self.instrs {
            match instr {
                Instr::AddCt { a, b } => {
                    let c = ev.add_ct(&cts[*a], &cts[*b]);
                    cts.push(c);
                }
                Instr::Convert { ct } => mem.push(ev.convert_input(&cts[*ct])?),
                Instr::Mul { ct, mem: m } => mem.push(ev.mul(&cts[*ct], &mem[*m])?),
                Instr::Add { a, b } => mem.push(ev.add(&mem[*a], &mem[*b])?),
                Instr::Sub { a, b } => mem.push(ev.sub(&mem[*a], &mem[*b])?),
                Instr::CMul { c, mem: m } => mem.push(ev.cmul(&BigInt::from(*c), &mem[*m])),
            }
        }
        Ok(self.outputs.iter().map(|&o| ev.output(&mem[o])).collect())
    }

    pub fn encrypt_inputs<E: Encryptor>(
        &self,
        enc: &E,
        rng: &mut dyn rand::RngCore,
    ) -> Result<Vec<E::Ciphertext>> {
        self.inputs.iter().map(|x| enc.input_signed(x, rng)).collect()
    }
}

/// Random program with at most `max_gates` Mul/ConvertInput gates whose
/// intermediate values all stay within `payload_bits` bits, so they may be
/// fed back into multiplications exactly.
pub fn random_program<R: Rng + ?Sized>(rng: &mut R, max_gates: usize, payload_bits: u32) -> Program {
    let input_bits = (payload_bits / 8).clamp(2, 16);
    let inputs: Vec<BigInt> = (0..rng.gen_range(1..=4))
        .map(|_| BigInt::from(rng.gen_range(-(1i64 << input_bits)..=1i64 << input_bits)))
        .collect();
    let mut cts = inputs.clone();
    let mut mem: Vec<BigInt> = vec![BigInt::one()];
    let mut instrs = Vec::new();
    let mut gates = 0;
    let target = rng.gen_range(1..=max_gates.max(1));
    let ok = |v: &BigInt| fits_payload(v, payload_bits);
    let mut attempts = 0;
    while gates < target && attempts < 20 * max_gates + 20 {
        attempts += 1;
        let kind = rng.gen_range(0..6);
        let (instr, value) = match kind {
            0 => {
                let (a, b) = (rng.gen_range(0..cts.len()), rng.gen_range(0..cts.len()));
                let v = &cts[a] + &cts[b];
                if !ok(&v) {
                    continue;
                }
                cts.push(v);
                instrs.push(Instr::AddCt { a, b });
                continue;
            }
            1 => {
                let ct = rng.gen_range(0..cts.len());
                (Instr::Convert { ct }, cts[ct].clone())
            }
            2 => {
                let (ct, m) = (rng.gen_range(0..cts.len()), rng.gen_range(0..mem.len()));
                (Instr::Mul { ct, mem: m }, &cts[ct] * &mem[m])
            }
            3 => {
                let (a, b) = (rng.gen_range(0..mem.len()), rng.gen_range(0..mem.len()));
                (Instr::Add { a, b }, &mem[a] + &mem[b])
            }
            4 => {
                let (a, b) = (rng.gen_range(0..mem.len()), rng.gen_range(0..mem.len()));
                (Instr::Sub { a, b }, &mem[a] - &mem[b])
            }
            _ => {
                let (c, m) = (rng.gen_range(-16i64..=16), rng.gen_range(0..mem.len()));
                (Instr::CMul { c, mem: m }, BigInt::from(c) * &mem[m])
            }
        };
        if !ok(&value) {
            continue;
        }
        if matches!(instr, Instr::Convert { .. } | Instr::Mul { .. }) {
            gates += 1;
        }
        instrs.push(instr);
        mem.push(value);
    }
    let outputs = (0..rng.gen_range(1..=3)).map(|_| rng.gen_range(0..mem.len())).collect();
    Program { inputs, instrs, outputs }
}

/// `⟨y⟩₁ − ⟨y⟩₀` for every output, centered mod `n`.
pub fn reconstruct_outputs(s0: &[Share], s1: &[Share], n: &BigUint) -> Result<Vec<BigInt>> {
    s0.iter()
        .zip(s1)
        .map(|(a, b)| Share::reconstruct(a, b, n).map(|v| super::centered(&v, n)))
        .collect()
}

/// Largest absolute plaintext of any register, for reporting.
pub fn max_magnitude(values: &[BigInt]) -> BigInt {
    values.iter().map(|v| v.abs()).max().unwrap_or_else(BigInt::zero)
}

//! Fixed safe primes for deterministic keys at the default profile.
//!
//! Generating 1536-bit safe primes takes minutes on one core, so tests and
//! benchmarks that only need a well-formed 3072-bit key use these.

use num_bigint::BigUint;
use num_traits::Num;

const P: &[&str] = &[
    "f0b0c0cc95f41f45ec0a54122412b798ddaa9e1a164c43cf100c12569c96aa3d",
    "43d1ce57fcfd529e3a7ec9485f4659b1a1ebae3132f7ae3ffd54d26aa4b84142",
    "3deeec28f9121af7056872d8e849ae5e4c1b583c14e10748e814b621a314fdfb",
    "4bfc204bcf759fee0faaaf40286ee32bf2bd01de81cd336ecafbf2bbf470c2f9",
    "19326f1ddf24effa98050ce9bd68ad79a5ab81a628486fbb7a7ba23b21b8ad91",
    "40e78323fe6e0f2c4513ae1a761174771fbdd90e37b8e432c3c645228015293f",
];

const Q: &[&str] = &[
    "ebc0490bdc2e99cba5df8f30ba989c26f28d65fa32e61c3d721c4f8e5d044f89",
    "c49696c447d92b648b891dbb1618e4e4d3b1e7ffd0f200e06ba634919844a74f",
    "2e4092c81a8b9bc1df5c39094463e32d805ffbd6268613219386c672a7ea10d0",
    "08ffc3f0859632de38c0a73b798881922ec7e5a0e59ec99f4d723947d3a59899",
    "b15ed9d65650d296fb6ccea1f34bf87158e64e736487f121d93e96023ac74908",
    "890448d20bd26a2d38ddba6a4994ffc2494cc077e09d8c628ccad09e42627877",
];

fn parse(parts: &[&str]) -> BigUint {
    BigUint::from_str_radix(&parts.concat(), 16).expect("valid hex")
}

/// Two distinct 1536-bit safe primes whose product has 3072 bits.
pub fn default_profile_primes() -> (BigUint, BigUint) {
    (parse(P), parse(Q))
}

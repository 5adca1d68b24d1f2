use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{HssError, Result};

/// Named parameter sets. Profiles are never mixed within one deployment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// 192-bit modulus for exhaustive and randomized differential suites.
    Toy,
    /// 512-bit modulus with key escrow so tests can decrypt.
    Test,
    /// 3072-bit modulus, no escrow.
    Default,
}

impl Profile {
    pub fn params(self) -> HssParams {
        match self {
            Profile::Toy => HssParams {
                security_bits: 40,
                modulus_bits: 192,
                t_bits: 10,
                key_bits: 64,
            },
            Profile::Test => HssParams {
                security_bits: 64,
                modulus_bits: 512,
                t_bits: 10,
                key_bits: 128,
            },
            Profile::Default => HssParams {
                security_bits: 128,
                modulus_bits: 3072,
                t_bits: 10,
                key_bits: 256,
            },
        }
    }

    /// Whether keygen under this profile also emits the escrowed secret.
    pub fn escrow(self) -> bool {
        !matches!(self, Profile::Default)
    }

    pub fn tag(self) -> u8 {
        match self {
            Profile::Toy => 0,
            Profile::Test => 1,
            Profile::Default => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Profile::Toy),
            1 => Some(Profile::Test),
            2 => Some(Profile::Default),
            _ => None,
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Toy => "toy",
            Profile::Test => "test",
            Profile::Default => "default",
        })
    }
}

impl FromStr for Profile {
    type Err = HssError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "toy" => Ok(Profile::Toy),
            "test" => Ok(Profile::Test),
            "default" => Ok(Profile::Default),
            other => Err(HssError::Domain(format!("unknown profile {other:?}"))),
        }
    }
}

/// Parameters of the HSS instantiation.
///
/// The output modulus is always the Paillier modulus `N`; see
/// [`crate::hss::paillier::PublicKey::n_out`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HssParams {
    pub security_bits: u32,
    pub modulus_bits: u32,
    pub t_bits: u32,
    /// Bit length of the ElGamal secret `d`.
    pub key_bits: u32,
}

impl HssParams {
    pub fn validate(&self) -> Result<()> {
        if self.t_bits == 0 || self.t_bits > 32 {
            return Err(HssError::Domain(format!("t_bits must be in 1..=32, got {}", self.t_bits)));
        }
        if self.modulus_bits < 64 || !self.modulus_bits.is_multiple_of(2) {
            return Err(HssError::Domain(format!("modulus_bits {} unusable", self.modulus_bits)));
        }
        if self.key_bits + self.security_bits + 2 >= self.modulus_bits {
            return Err(HssError::Domain("key_bits + security_bits leave no payload room".into()));
        }
        Ok(())
    }

    /// Largest bit length of a plaintext that may be fed back into a
    /// multiplication without risking a conversion wraparound.
    pub fn payload_bits(&self) -> u32 {
        self.modulus_bits - self.key_bits - self.security_bits - 2
    }

    /// Bytes of one group element mod N², fixed width.
    pub fn element_bytes(&self) -> usize {
        (2 * self.modulus_bits as usize).div_ceil(8)
    }

    /// Bytes of one share mod N, fixed width.
    pub fn share_bytes(&self) -> usize {
        (self.modulus_bits as usize).div_ceil(8)
    }

    pub fn ciphertext_bytes(&self) -> usize {
        4 * self.element_bytes()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles_validate() {
        for p in [Profile::Toy, Profile::Test, Profile::Default] {
            p.params().validate().unwrap();
            assert_eq!(Profile::from_tag(p.tag()), Some(p));
            assert_eq!(p.to_string().parse::<Profile>().unwrap(), p);
        }
        let d = Profile::Default.params();
        assert!(d.modulus_bits >= 2 * d.security_bits);
    }

    #[test]
    fn default_ciphertext_is_3072_bytes() {
        assert_eq!(Profile::Default.params().ciphertext_bytes(), 3072);
        assert_eq!(Profile::Test.params().ciphertext_bytes(), 512);
    }

    #[test]
    fn rejects_bad_width() {
        let mut p = Profile::Toy.params();
        p.t_bits = 0;
        assert!(p.validate().is_err());
    }
}

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

use super::ParamError;
use crate::codec::Value;

/// External validity predicates selectable per scenario.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Validity {
    AlwaysTrue,
    /// The last four bytes are the first four bytes of SHA-256 of the rest.
    ChecksumSuffix,
    /// The value starts with the given bytes.
    FixedPrefix {
        #[serde(with = "hex_bytes")]
        prefix: Vec<u8>,
    },
}

mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(b: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(b))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        hex::decode(s).map_err(serde::de::Error::custom)
    }
}

fn checksum(prefix: &[u8]) -> [u8; 4] {
    let h = Sha256::digest(prefix);
    [h[0], h[1], h[2], h[3]]
}

impl Validity {
    pub fn name(&self) -> &'static str {
        match self {
            Validity::AlwaysTrue => "always-true",
            Validity::ChecksumSuffix => "checksum-suffix",
            Validity::FixedPrefix { .. } => "fixed-prefix",
        }
    }

    pub fn check_length(&self, ell: u32) -> Result<(), ParamError> {
        let need = match self {
            Validity::AlwaysTrue => return Ok(()),
            Validity::ChecksumSuffix => 40,
            Validity::FixedPrefix { prefix } => prefix.len() as u32 * 8,
        };
        if ell % 8 != 0 || ell < need {
            return Err(ParamError::Invalid(format!(
                "{} needs a whole number of bytes and at least {need} bits, got ell = {ell}",
                self.name()
            )));
        }
        Ok(())
    }

    pub fn valid(&self, v: &Value) -> bool {
        let b = v.bytes();
        match self {
            Validity::AlwaysTrue => true,
            Validity::ChecksumSuffix => {
                b.len() >= 5 && v.bits() % 8 == 0 && b[b.len() - 4..] == checksum(&b[..b.len() - 4])
            }
            Validity::FixedPrefix { prefix } => b.starts_with(prefix),
        }
    }

    /// A uniformly random valid value of `ell` bits.
    pub fn sample(&self, rng: &mut impl Rng, ell: u32) -> Value {
        let mut bytes = vec![0u8; ell.div_ceil(8) as usize];
        rng.fill(&mut bytes[..]);
        match self {
            Validity::AlwaysTrue => {}
            Validity::ChecksumSuffix => {
                let k = bytes.len() - 4;
                let c = checksum(&bytes[..k]);
                bytes[k..].copy_from_slice(&c);
            }
            Validity::FixedPrefix { prefix } => bytes[..prefix.len()].copy_from_slice(prefix),
        }
        Value::from_bytes_truncated(bytes, ell)
    }

    /// A random value that fails the predicate, if one exists.
    pub fn sample_invalid(&self, rng: &mut impl Rng, ell: u32) -> Option<Value> {
        let mut v = self.sample(rng, ell);
        match self {
            Validity::AlwaysTrue => return None,
            Validity::ChecksumSuffix => {
                let mut b = v.bytes().to_vec();
                let last = b.len() - 1;
                b[last] ^= 1;
                v = Value::from_bytes_truncated(b, ell);
            }
            Validity::FixedPrefix { prefix } => {
                if prefix.is_empty() {
                    return None;
                }
                let mut b = v.bytes().to_vec();
                b[0] ^= 0xff;
                v = Value::from_bytes_truncated(b, ell);
            }
        }
        Some(v)
    }
}

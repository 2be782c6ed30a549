//! Truncated SHA-256 digests with domain separation.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

use super::CodecError;

const TAG_LEAF: u8 = 0x00;
const TAG_NODE: u8 = 0x01;
const TAG_CRO: u8 = 0x02;
const TAG_SALT: u8 = 0x03;

/// Digest width in bits. A multiple of 8 between 64 and 256.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u16", into = "u16")]
pub struct Kappa(u16);

impl Kappa {
    pub const DEFAULT: Kappa = Kappa(256);

    pub fn new(bits: u16) -> Result<Kappa, CodecError> {
        if !(64..=256).contains(&bits) || bits % 8 != 0 {
            return Err(CodecError::InvalidParameters(format!(
                "kappa must be a multiple of 8 in [64, 256], got {bits}"
            )));
        }
        Ok(Kappa(bits))
    }

    pub fn bits(self) -> u16 {
        self.0
    }

    pub fn bytes(self) -> usize {
        self.0 as usize / 8
    }
}

impl Default for Kappa {
    fn default() -> Self {
        Kappa::DEFAULT
    }
}

impl TryFrom<u16> for Kappa {
    type Error = CodecError;
    fn try_from(v: u16) -> Result<Self, Self::Error> {
        Kappa::new(v)
    }
}

impl From<Kappa> for u16 {
    fn from(k: Kappa) -> u16 {
        k.0
    }
}

/// A κ-bit accumulation value. Bytes past κ/8 are always zero, so the derived
/// ordering is the unsigned bytewise lexicographic order on the κ-bit prefix.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Digest([u8; 32]);

impl Digest {
    pub const ZERO: Digest = Digest([0; 32]);

    pub fn from_prefix(kappa: Kappa, bytes: &[u8]) -> Digest {
        let mut out = [0u8; 32];
        let k = kappa.bytes().min(bytes.len());
        out[..k].copy_from_slice(&bytes[..k]);
        Digest(out)
    }

    pub fn as_bytes(&self, kappa: Kappa) -> &[u8] {
        &self.0[..kappa.bytes()]
    }

    pub fn raw(&self) -> &[u8; 32] {
        &self.0
    }

    /// Flip one bit of the κ-bit prefix.
    pub fn flip_bit(&mut self, kappa: Kappa, bit: usize) {
        let bit = bit % kappa.bits() as usize;
        self.0[bit / 8] ^= 0x80 >> (bit % 8);
    }

    pub fn short_hex(&self) -> String {
        hex::encode(&self.0[..6])
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", self.short_hex())
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.short_hex())
    }
}

/// A κ-bit random salt drawn from the noise coin.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Noise(pub Digest);

fn sha(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    h.finalize().into()
}

pub(crate) fn leaf(kappa: Kappa, index: u32, payload: &[u32]) -> Digest {
    let mut buf = Vec::with_capacity(9 + 4 * payload.len());
    buf.push(TAG_LEAF);
    buf.extend_from_slice(&index.to_be_bytes());
    buf.extend_from_slice(&(payload.len() as u32).to_be_bytes());
    for e in payload {
        buf.extend_from_slice(&e.to_be_bytes());
    }
    Digest::from_prefix(kappa, &sha(&[&buf]))
}

pub(crate) fn node(kappa: Kappa, left: &Digest, right: &Digest) -> Digest {
    Digest::from_prefix(
        kappa,
        &sha(&[&[TAG_NODE], left.as_bytes(kappa), right.as_bytes(kappa)]),
    )
}

/// Collision-resistant hash of an arbitrary byte string.
pub fn cro_hash(kappa: Kappa, x: &[u8]) -> Digest {
    Digest::from_prefix(kappa, &sha(&[&[TAG_CRO], x]))
}

/// Random-oracle style hash of a digest under a salt.
pub fn salted_hash(kappa: Kappa, z: &Digest, phi: &Noise) -> Digest {
    Digest::from_prefix(
        kappa,
        &sha(&[&[TAG_SALT], z.as_bytes(kappa), phi.0.as_bytes(kappa)]),
    )
}

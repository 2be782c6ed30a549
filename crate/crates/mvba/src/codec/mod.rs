//! Erasure coding, accumulators and hashing.
//!
//! Everything here is a pure function of its inputs.

mod field;
mod hash;
mod merkle;
mod rs;

use thiserror::Error;

pub use field::P as FIELD_ORDER;
pub use hash::{cro_hash, salted_hash, Digest, Kappa, Noise};
pub use merkle::{accumulate, accumulate_with_witnesses, create_witness, depth, verify_witness, Side, Witness};
pub use rs::{chunk_count, decode, decode_chunks, encode, encode_chunks, payload_len, to_chunks, RsSymbol, Value};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("insufficient symbols: have {have}, need {need}")]
    InsufficientSymbols { have: usize, need: usize },
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
    #[error("symbols are not consistent with a single encoding")]
    Inconsistent,
}

/// Everything a process needs to disseminate one proposal.
#[derive(Clone, Debug)]
pub struct Encoding {
    pub digest: Digest,
    pub symbols: Vec<RsSymbol>,
    pub witnesses: Vec<Witness>,
}

/// Encode `v`, accumulate the symbols and build every witness.
pub fn disperse(kappa: Kappa, v: &Value, degree: usize, n: usize) -> Result<Encoding, CodecError> {
    let symbols = encode(v, degree, n)?;
    let (digest, witnesses) = accumulate_with_witnesses(kappa, &symbols)?;
    Ok(Encoding { digest, symbols, witnesses })
}

/// Digest of the all-zero symbol vector for the given shape.
pub fn default_digest(kappa: Kappa, ell: u32, degree: usize, n: usize) -> Result<Digest, CodecError> {
    Ok(disperse(kappa, &Value::zero(ell), degree, n)?.digest)
}

//! Reed–Solomon erasure coding over GF(65537).
//!
//! A value of ℓ bits is split into 16-bit chunks. Consecutive groups of
//! `degree + 1` chunks become the coefficients of one polynomial (lowest
//! degree first, the final group zero-padded), and symbol `j` holds the
//! evaluation of every polynomial at `x = j`.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use super::field;
use super::CodecError;

/// An opaque ℓ-bit proposal. Bits past ℓ in the last byte are zero.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Value {
    bits: u32,
    bytes: Arc<[u8]>,
}

impl Value {
    pub fn new(bytes: Vec<u8>, bits: u32) -> Result<Value, CodecError> {
        if bits == 0 {
            return Err(CodecError::InvalidParameters("value length must be positive".into()));
        }
        if bytes.len() != bits.div_ceil(8) as usize {
            return Err(CodecError::InvalidInput("byte length does not match bit length"));
        }
        let spare = bytes.len() as u32 * 8 - bits;
        if spare > 0 && bytes[bytes.len() - 1] & ((1u8 << spare) - 1) != 0 {
            return Err(CodecError::InvalidInput("bits past the value length are set"));
        }
        Ok(Value { bits, bytes: bytes.into() })
    }

    /// Build a value from arbitrary bytes, truncating or zero-extending to `bits`.
    pub fn from_bytes_truncated(mut bytes: Vec<u8>, bits: u32) -> Value {
        bytes.resize(bits.div_ceil(8) as usize, 0);
        let spare = bytes.len() as u32 * 8 - bits;
        if spare > 0 {
            let last = bytes.len() - 1;
            bytes[last] &= !((1u8 << spare) - 1);
        }
        Value { bits, bytes: bytes.into() }
    }

    pub fn zero(bits: u32) -> Value {
        Value::from_bytes_truncated(Vec::new(), bits)
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let head = &self.bytes[..self.bytes.len().min(6)];
        write!(f, "Value({}b:{})", self.bits, hex::encode(head))
    }
}

/// One evaluation point of an encoding: index `j` and the values of every
/// chunk polynomial at `x = j`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct RsSymbol {
    pub index: u16,
    pub payload: Arc<[u32]>,
}

/// Number of 16-bit chunks of an ℓ-bit value.
pub fn chunk_count(ell: u32) -> usize {
    ell.div_ceil(16) as usize
}

/// Number of field elements per symbol.
pub fn payload_len(ell: u32, degree: usize) -> usize {
    chunk_count(ell).div_ceil(degree + 1)
}

pub fn to_chunks(v: &Value) -> Vec<u32> {
    v.bytes()
        .chunks(2)
        .map(|c| {
            let hi = c[0] as u32;
            let lo = c.get(1).copied().unwrap_or(0) as u32;
            (hi << 8) | lo
        })
        .collect()
}

fn check_params(degree: usize, n: usize) -> Result<(), CodecError> {
    if degree == 0 || degree >= n || n >= field::P as usize {
        return Err(CodecError::InvalidParameters(format!(
            "need 0 < degree < n < {}, got degree {degree}, n {n}",
            field::P
        )));
    }
    Ok(())
}

/// Encode chunk values directly, one polynomial per `degree + 1` chunks.
pub fn encode_chunks(chunks: &[u32], degree: usize, n: usize) -> Result<Vec<RsSymbol>, CodecError> {
    check_params(degree, n)?;
    let polys: Vec<Vec<u32>> = chunks
        .chunks(degree + 1)
        .map(|c| {
            let mut p = c.to_vec();
            p.resize(degree + 1, 0);
            p
        })
        .collect();
    Ok((1..=n)
        .map(|j| RsSymbol {
            index: j as u16,
            payload: polys.iter().map(|p| field::eval(p, j as u32)).collect(),
        })
        .collect())
}

/// Encode a value into `n` symbols at polynomial degree `degree`.
pub fn encode(v: &Value, degree: usize, n: usize) -> Result<Vec<RsSymbol>, CodecError> {
    encode_chunks(&to_chunks(v), degree, n)
}

/// Interpolate chunk coefficients from `symbols`. Every symbol beyond the
/// first `degree + 1` (by index) must agree with the interpolated polynomials.
pub fn decode_chunks(symbols: &[RsSymbol], degree: usize) -> Result<Vec<u32>, CodecError> {
    let need = degree + 1;
    if symbols.len() < need {
        return Err(CodecError::InsufficientSymbols { have: symbols.len(), need });
    }
    let mut seen = BTreeSet::new();
    for s in symbols {
        if s.index == 0 || !seen.insert(s.index) {
            return Err(CodecError::InvalidInput("duplicate or zero symbol index"));
        }
    }
    let width = symbols[0].payload.len();
    if symbols.iter().any(|s| s.payload.len() != width || s.payload.iter().any(|&e| e >= field::P)) {
        return Err(CodecError::InvalidInput("malformed symbol payload"));
    }
    let mut sorted: Vec<&RsSymbol> = symbols.iter().collect();
    sorted.sort_by_key(|s| s.index);
    let (base, rest) = sorted.split_at(need);
    let xs: Vec<u32> = base.iter().map(|s| s.index as u32).collect();
    let basis = field::lagrange_basis(&xs);

    let mut chunks = Vec::with_capacity(width * need);
    for p in 0..width {
        let mut coeffs = vec![0u32; need];
        for (j, s) in base.iter().enumerate() {
            let y = s.payload[p];
            if y == 0 {
                continue;
            }
            for (d, c) in coeffs.iter_mut().enumerate() {
                *c = field::add(*c, field::mul(y, basis[j][d]));
            }
        }
        for s in rest {
            if field::eval(&coeffs, s.index as u32) != s.payload[p] {
                return Err(CodecError::Inconsistent);
            }
        }
        chunks.extend_from_slice(&coeffs);
    }
    Ok(chunks)
}

/// Decode an ℓ-bit value from at least `degree + 1` symbols.
pub fn decode(symbols: &[RsSymbol], degree: usize, ell: u32) -> Result<Value, CodecError> {
    let chunks = decode_chunks(symbols, degree)?;
    let m = chunk_count(ell);
    if symbols[0].payload.len() != payload_len(ell, degree) {
        return Err(CodecError::InvalidInput("payload width does not match value length"));
    }
    if chunks[..m].iter().any(|&c| c > 0xFFFF) || chunks[m..].iter().any(|&c| c != 0) {
        return Err(CodecError::Inconsistent);
    }
    let mut bytes = Vec::with_capacity(m * 2);
    for c in &chunks[..m] {
        bytes.push((c >> 8) as u8);
        bytes.push(*c as u8);
    }
    bytes.truncate(ell.div_ceil(8) as usize);
    Value::new(bytes, ell).map_err(|_| CodecError::Inconsistent)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_evaluations() {
        let syms = encode_chunks(&[3, 5], 1, 5).unwrap();
        let got: Vec<u32> = syms.iter().map(|s| s.payload[0]).collect();
        assert_eq!(got, vec![8, 13, 18, 23, 28]);
    }

    #[test]
    fn hand_computed_interpolation() {
        let syms = encode_chunks(&[3, 5], 1, 5).unwrap();
        let subset = vec![syms[0].clone(), syms[2].clone()];
        assert_eq!(decode_chunks(&subset, 1).unwrap(), vec![3, 5]);
    }

    #[test]
    fn too_few_symbols() {
        let v = Value::new(vec![1, 2, 3, 4], 32).unwrap();
        let syms = encode(&v, 2, 7).unwrap();
        assert_eq!(
            decode(&syms[..2], 2, 32),
            Err(CodecError::InsufficientSymbols { have: 2, need: 3 })
        );
    }

    #[test]
    fn duplicate_indices_rejected() {
        let v = Value::new(vec![9, 9], 16).unwrap();
        let syms = encode(&v, 1, 4).unwrap();
        let dup = vec![syms[1].clone(), syms[1].clone()];
        assert!(matches!(decode(&dup, 1, 16), Err(CodecError::InvalidInput(_))));
    }

    #[test]
    fn bad_parameters() {
        let v = Value::zero(8);
        assert!(encode(&v, 4, 4).is_err());
        assert!(encode(&v, 0, 4).is_err());
    }

    #[test]
    fn odd_bit_lengths_roundtrip() {
        let v = Value::from_bytes_truncated(vec![0xff; 5], 37);
        let syms = encode(&v, 1, 5).unwrap();
        assert_eq!(decode(&syms[3..], 1, 37).unwrap(), v);
    }

    #[test]
    fn full_set_matches_subset() {
        let v = Value::new((0..64).collect(), 512).unwrap();
        let syms = encode(&v, 4, 17).unwrap();
        assert_eq!(decode(&syms, 4, 512).unwrap(), decode(&syms[7..12], 4, 512).unwrap());
    }

    #[test]
    fn tampered_extra_symbol_is_inconsistent() {
        let v = Value::new(vec![1, 2, 3, 4], 32).unwrap();
        let mut syms = encode(&v, 1, 5).unwrap();
        let mut p = syms[4].payload.to_vec();
        p[0] = field::add(p[0], 1);
        syms[4].payload = p.into();
        assert_eq!(decode(&syms, 1, 32), Err(CodecError::Inconsistent));
    }

    #[test]
    fn value_rejects_stray_bits() {
        assert!(Value::new(vec![0x01], 7).is_err());
        assert!(Value::new(vec![0x02], 7).is_ok());
        assert!(Value::new(vec![0, 0], 7).is_err());
    }
}

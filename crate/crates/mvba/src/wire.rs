//! Bit-exact wire format.
//!
//! Every protocol message implements [`Encode`]. The same code path either
//! records the bits or only counts them, so the bit size logged by the
//! simulator is by construction the length of the serialized message.
//!
//! Field widths: layer tags 8 bits, process indices and sub-iteration or
//! round numbers 16 bits, iteration numbers 32 bits, list lengths 8 bits,
//! field elements 17 bits, digests κ bits, values ℓ bits.

use crate::codec::{Digest, Kappa, RsSymbol, Side, Value, Witness};

pub const TAG_BITS: u32 = 8;
pub const PID_BITS: u32 = 16;
pub const ITER_BITS: u32 = 32;
pub const SUB_BITS: u32 = 16;
pub const ROUND_BITS: u32 = 16;
pub const LEN_BITS: u32 = 8;
pub const FIELD_BITS: u32 = 17;

/// Reserved tag bytes for sentinel values.
pub const TAG_SOME: u64 = 0x00;
pub const TAG_BOT_CRB: u64 = 0xFE;
pub const TAG_BOT_ITEM: u64 = 0xFD;
pub const TAG_NONE: u64 = 0xFF;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WireParams {
    pub kappa: Kappa,
}

/// A bit sink that either stores or only counts.
#[derive(Debug, Default)]
pub struct BitWriter {
    buf: Option<Vec<u8>>,
    len: u64,
}

impl BitWriter {
    pub fn counter() -> BitWriter {
        BitWriter { buf: None, len: 0 }
    }

    pub fn recorder() -> BitWriter {
        BitWriter { buf: Some(Vec::new()), len: 0 }
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf.unwrap_or_default()
    }

    /// Append the low `width` bits of `value`, most significant first.
    pub fn put(&mut self, value: u64, width: u32) {
        debug_assert!(width <= 64);
        debug_assert!(width == 64 || value >> width == 0, "value does not fit in {width} bits");
        if let Some(buf) = self.buf.as_mut() {
            for i in (0..width).rev() {
                let bit = (value >> i) & 1;
                let pos = self.len as usize;
                if pos % 8 == 0 {
                    buf.push(0);
                }
                if bit == 1 {
                    *buf.last_mut().unwrap() |= 0x80 >> (pos % 8);
                }
                self.len += 1;
            }
        } else {
            self.len += width as u64;
        }
    }

    /// Append the first `bits` bits of `bytes`.
    pub fn put_bits(&mut self, bytes: &[u8], bits: u32) {
        if self.buf.is_none() {
            self.len += bits as u64;
            return;
        }
        let mut left = bits;
        for &b in bytes {
            if left == 0 {
                break;
            }
            let take = left.min(8);
            self.put((b >> (8 - take)) as u64, take);
            left -= take;
        }
    }
}

pub trait Encode {
    fn encode(&self, w: &mut BitWriter, p: &WireParams);

    fn bits(&self, p: &WireParams) -> u64 {
        let mut w = BitWriter::counter();
        self.encode(&mut w, p);
        w.len()
    }

    fn to_bytes(&self, p: &WireParams) -> (Vec<u8>, u64) {
        let mut w = BitWriter::recorder();
        self.encode(&mut w, p);
        let len = w.len();
        (w.into_bytes(), len)
    }
}

impl Encode for Digest {
    fn encode(&self, w: &mut BitWriter, p: &WireParams) {
        w.put_bits(self.as_bytes(p.kappa), p.kappa.bits() as u32);
    }
}

impl Encode for Value {
    fn encode(&self, w: &mut BitWriter, _p: &WireParams) {
        w.put_bits(self.bytes(), self.bits());
    }
}

impl Encode for RsSymbol {
    fn encode(&self, w: &mut BitWriter, _p: &WireParams) {
        w.put(self.index as u64, PID_BITS);
        w.put(self.payload.len() as u64, 16);
        for &e in self.payload.iter() {
            w.put(e as u64, FIELD_BITS);
        }
    }
}

impl Encode for Witness {
    fn encode(&self, w: &mut BitWriter, p: &WireParams) {
        w.put(self.path.len() as u64, LEN_BITS);
        for (d, side) in self.path.iter() {
            d.encode(w, p);
            w.put(matches!(side, Side::Left) as u64, 1);
        }
    }
}

impl Encode for bool {
    fn encode(&self, w: &mut BitWriter, _p: &WireParams) {
        w.put(*self as u64, 1);
    }
}

impl<T: Encode> Encode for Option<T> {
    fn encode(&self, w: &mut BitWriter, p: &WireParams) {
        match self {
            Some(v) => {
                w.put(TAG_SOME, TAG_BITS);
                v.encode(w, p);
            }
            None => w.put(TAG_NONE, TAG_BITS),
        }
    }
}

impl<T: Encode> Encode for [T] {
    fn encode(&self, w: &mut BitWriter, p: &WireParams) {
        w.put(self.len().min(255) as u64, LEN_BITS);
        for v in self.iter().take(255) {
            v.encode(w, p);
        }
    }
}

impl<T: Encode> Encode for Vec<T> {
    fn encode(&self, w: &mut BitWriter, p: &WireParams) {
        self.as_slice().encode(w, p)
    }
}

//! Graded consensus, binary Byzantine agreement, and their composition into
//! multi-valued Byzantine agreement (MBA).
//!
//! All three tolerate `t < n/3`. Each instance is a pure state machine that
//! talks through an [`Env`](crate::runtime::Env) and returns its decision from
//! the call that produced it. Messages received before a process proposes are
//! recorded but trigger nothing until it does.

mod ba;
mod gc;
mod mba;

use std::fmt::Debug;
use std::hash::Hash;

use thiserror::Error;

use crate::codec::{cro_hash, Digest, Kappa, Value};
use crate::wire::Encode;

pub use ba::{Ba, BaMsg};
pub use gc::{Gc, GcMsg, ItemRef};
pub use mba::{Mba, MbaMsg, MbaOutcome};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum AgreementError {
    #[error("protocol misuse: {0}")]
    ProtocolMisuse(&'static str),
}

/// A value that can be agreed upon.
pub trait Payload: Clone + Eq + Ord + Hash + Debug + Encode {
    /// κ-bit identifier used in place of the value in late protocol phases.
    fn fingerprint(&self, kappa: Kappa) -> Digest;

    /// Visit the digests a Byzantine sender may substitute.
    fn visit_digests(&mut self, _f: &mut dyn FnMut(&mut Digest)) {}

    /// Flip one bit of the payload. Returns false if there is nothing to flip.
    fn tamper(&mut self, _salt: u64, _kappa: Kappa) -> bool {
        false
    }
}

impl Payload for Value {
    fn fingerprint(&self, kappa: Kappa) -> Digest {
        let mut buf = Vec::with_capacity(self.bytes().len() + 5);
        buf.push(b'v');
        buf.extend_from_slice(&self.bits().to_be_bytes());
        buf.extend_from_slice(self.bytes());
        cro_hash(kappa, &buf)
    }

    fn tamper(&mut self, salt: u64, _kappa: Kappa) -> bool {
        let bit = (salt % self.bits() as u64) as usize;
        let mut bytes = self.bytes().to_vec();
        bytes[bit / 8] ^= 0x80 >> (bit % 8);
        *self = Value::new(bytes, self.bits()).expect("flipped bit lies inside the value");
        true
    }
}

impl Payload for Digest {
    fn fingerprint(&self, kappa: Kappa) -> Digest {
        let mut buf = vec![b'd'];
        buf.extend_from_slice(self.as_bytes(kappa));
        cro_hash(kappa, &buf)
    }

    fn visit_digests(&mut self, f: &mut dyn FnMut(&mut Digest)) {
        f(self)
    }

    fn tamper(&mut self, salt: u64, kappa: Kappa) -> bool {
        self.flip_bit(kappa, (salt % kappa.bits() as u64) as usize);
        true
    }
}

impl Payload for bool {
    fn fingerprint(&self, kappa: Kappa) -> Digest {
        cro_hash(kappa, &[b'b', *self as u8])
    }

    fn tamper(&mut self, _salt: u64, _kappa: Kappa) -> bool {
        *self = !*self;
        true
    }
}

/// `n - t`, the quorum every wait uses.
pub(crate) fn quorum(n: usize, t: usize) -> usize {
    n - t
}

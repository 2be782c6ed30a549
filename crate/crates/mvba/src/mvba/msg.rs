use std::sync::Arc;

use crate::agreement::{MbaMsg, Payload};
use crate::codec::{Digest, RsSymbol, Value, Witness, FIELD_ORDER};
use crate::runtime::WireMessage;
use crate::smba::SmbaMsg;
use crate::wire::{BitWriter, Encode, WireParams, ITER_BITS, SUB_BITS, TAG_BITS, TAG_NONE, TAG_SOME};

/// What a process keeps from a sender's dissemination.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SymbolRecord {
    pub symbol: RsSymbol,
    pub digest: Digest,
    pub witness: Witness,
}

impl Encode for SymbolRecord {
    fn encode(&self, w: &mut BitWriter, p: &WireParams) {
        self.symbol.encode(w, p);
        self.digest.encode(w, p);
        self.witness.encode(w, p);
    }
}

fn tamper_symbol(sym: &mut RsSymbol, salt: u64) -> bool {
    if sym.payload.is_empty() {
        return false;
    }
    let mut payload = sym.payload.to_vec();
    let i = (salt as usize) % payload.len();
    payload[i] = (payload[i] + 1 + (salt >> 32) as u32 % (FIELD_ORDER - 1)) % FIELD_ORDER;
    sym.payload = Arc::from(payload);
    true
}

fn flip(d: &mut Digest, salt: u64, p: &WireParams) -> bool {
    d.flip_bit(p.kappa, (salt % p.kappa.bits() as u64) as usize);
    true
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum MvbaMsg {
    Init(SymbolRecord),
    Ack,
    Done,
    Finish,
    Stored { k: u32, digest: Option<Digest> },
    Suggest { k: u32, candidates: Vec<Digest> },
    Reconstruct { k: u32, x: u32, record: Option<SymbolRecord> },
    Smba { k: u32, x: u32, msg: SmbaMsg },
    Mba { k: u32, x: u32, msg: MbaMsg<Value> },
}

impl MvbaMsg {
    pub fn iteration(&self) -> Option<u32> {
        match self {
            MvbaMsg::Stored { k, .. }
            | MvbaMsg::Suggest { k, .. }
            | MvbaMsg::Reconstruct { k, .. }
            | MvbaMsg::Smba { k, .. }
            | MvbaMsg::Mba { k, .. } => Some(*k),
            _ => None,
        }
    }
}

impl Encode for MvbaMsg {
    fn encode(&self, w: &mut BitWriter, p: &WireParams) {
        match self {
            MvbaMsg::Init(r) => {
                w.put(0, TAG_BITS);
                r.encode(w, p);
            }
            MvbaMsg::Ack => w.put(1, TAG_BITS),
            MvbaMsg::Done => w.put(2, TAG_BITS),
            MvbaMsg::Finish => w.put(3, TAG_BITS),
            MvbaMsg::Stored { k, digest } => {
                w.put(4, TAG_BITS);
                w.put(*k as u64, ITER_BITS);
                match digest {
                    Some(d) => {
                        w.put(TAG_SOME, TAG_BITS);
                        d.encode(w, p);
                    }
                    None => w.put(TAG_NONE, TAG_BITS),
                }
            }
            MvbaMsg::Suggest { k, candidates } => {
                w.put(5, TAG_BITS);
                w.put(*k as u64, ITER_BITS);
                candidates.encode(w, p);
            }
            MvbaMsg::Reconstruct { k, x, record } => {
                w.put(6, TAG_BITS);
                w.put(*k as u64, ITER_BITS);
                w.put(*x as u64, SUB_BITS);
                match record {
                    Some(r) => {
                        w.put(TAG_SOME, TAG_BITS);
                        r.encode(w, p);
                    }
                    None => w.put(TAG_NONE, TAG_BITS),
                }
            }
            MvbaMsg::Smba { k, x, msg } => {
                w.put(7, TAG_BITS);
                w.put(*k as u64, ITER_BITS);
                w.put(*x as u64, SUB_BITS);
                msg.encode(w, p);
            }
            MvbaMsg::Mba { k, x, msg } => {
                w.put(8, TAG_BITS);
                w.put(*k as u64, ITER_BITS);
                w.put(*x as u64, SUB_BITS);
                msg.encode(w, p);
            }
        }
    }
}

impl WireMessage for MvbaMsg {
    fn kind(&self) -> &'static str {
        match self {
            MvbaMsg::Init(_) => "init",
            MvbaMsg::Ack => "ack",
            MvbaMsg::Done => "done",
            MvbaMsg::Finish => "finish",
            MvbaMsg::Stored { .. } => "stored",
            MvbaMsg::Suggest { .. } => "suggest",
            MvbaMsg::Reconstruct { .. } => "reconstruct",
            MvbaMsg::Smba { msg, .. } => msg.kind(),
            MvbaMsg::Mba { msg, .. } => msg.kind(),
        }
    }

    fn visit_digests(&mut self, f: &mut dyn FnMut(&mut Digest)) {
        match self {
            MvbaMsg::Init(r) => f(&mut r.digest),
            MvbaMsg::Ack | MvbaMsg::Done | MvbaMsg::Finish => {}
            MvbaMsg::Stored { digest, .. } => {
                if let Some(d) = digest {
                    f(d)
                }
            }
            MvbaMsg::Suggest { candidates, .. } => candidates.iter_mut().for_each(f),
            MvbaMsg::Reconstruct { record, .. } => {
                if let Some(r) = record {
                    f(&mut r.digest)
                }
            }
            MvbaMsg::Smba { msg, .. } => msg.visit_digests(f),
            MvbaMsg::Mba { msg, .. } => msg.visit_digests(f),
        }
    }

    fn tamper(&mut self, salt: u64, p: &WireParams) -> bool {
        match self {
            MvbaMsg::Init(r) => tamper_symbol(&mut r.symbol, salt),
            MvbaMsg::Ack | MvbaMsg::Done | MvbaMsg::Finish => false,
            MvbaMsg::Stored { digest, .. } => digest.as_mut().is_some_and(|d| flip(d, salt, p)),
            MvbaMsg::Suggest { candidates, .. } => {
                if candidates.is_empty() {
                    return false;
                }
                let i = salt as usize % candidates.len();
                flip(&mut candidates[i], salt >> 8, p)
            }
            MvbaMsg::Reconstruct { record, .. } => record.as_mut().is_some_and(|r| tamper_symbol(&mut r.symbol, salt)),
            MvbaMsg::Smba { msg, .. } => msg.tamper(salt, p),
            MvbaMsg::Mba { msg, .. } => msg.tamper(salt, p),
        }
    }
}

/// Fingerprint used when reporting decided values.
pub fn value_id(v: &Value, p: &WireParams) -> String {
    v.fingerprint(p.kappa).short_hex()
}

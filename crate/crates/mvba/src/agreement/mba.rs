//! Multi-valued agreement: graded consensus followed by binary agreement on
//! the grade.
//!
//! If every correct process proposes `v`, all of them decide `v`. If the binary
//! agreement settles on 1, some correct process saw grade 1, so every correct
//! process adopted the same value and decides it. Otherwise the decision is
//! [`MbaOutcome::Bot`].

use std::sync::Arc;

use super::{AgreementError, Ba, BaMsg, Gc, GcMsg, Payload};
use crate::codec::{Digest, Kappa};
use crate::runtime::{wrap, Env, ProcessId, WireMessage};
use crate::wire::{BitWriter, Encode, WireParams, TAG_BITS, TAG_NONE, TAG_SOME};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MbaOutcome<V> {
    Value(V),
    Bot,
}

impl<V> MbaOutcome<V> {
    pub fn value(&self) -> Option<&V> {
        match self {
            MbaOutcome::Value(v) => Some(v),
            MbaOutcome::Bot => None,
        }
    }
}

impl<V: Encode> Encode for MbaOutcome<V> {
    fn encode(&self, w: &mut BitWriter, p: &WireParams) {
        match self {
            MbaOutcome::Value(v) => {
                w.put(TAG_SOME, TAG_BITS);
                v.encode(w, p);
            }
            MbaOutcome::Bot => w.put(TAG_NONE, TAG_BITS),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum MbaMsg<V> {
    Gc(GcMsg<V>),
    Ba(BaMsg),
}

impl<V: Payload> WireMessage for MbaMsg<V> {
    fn kind(&self) -> &'static str {
        match self {
            MbaMsg::Gc(m) => m.kind(),
            MbaMsg::Ba(m) => m.kind(),
        }
    }

    fn visit_digests(&mut self, f: &mut dyn FnMut(&mut Digest)) {
        if let MbaMsg::Gc(m) = self {
            m.visit_digests(f)
        }
    }

    fn tamper(&mut self, salt: u64, p: &WireParams) -> bool {
        match self {
            MbaMsg::Gc(m) => m.tamper(salt, p),
            MbaMsg::Ba(m) => m.tamper(salt, p),
        }
    }
}

impl<V: Encode> Encode for MbaMsg<V> {
    fn encode(&self, w: &mut BitWriter, p: &WireParams) {
        match self {
            MbaMsg::Gc(m) => {
                w.put(0, TAG_BITS);
                m.encode(w, p);
            }
            MbaMsg::Ba(m) => {
                w.put(1, TAG_BITS);
                m.encode(w, p);
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Mba<V> {
    gc: Gc<V>,
    ba: Ba,
    adopted: Option<V>,
    decision: Option<MbaOutcome<V>>,
}

impl<V: Payload> Mba<V> {
    pub fn new(n: usize, t: usize, kappa: Kappa, instance: Arc<str>) -> Mba<V> {
        Mba { gc: Gc::new(n, t, kappa), ba: Ba::new(n, t, instance), adopted: None, decision: None }
    }

    pub fn decision(&self) -> Option<&MbaOutcome<V>> {
        self.decision.as_ref()
    }

    pub fn has_proposed(&self) -> bool {
        self.gc.has_proposed()
    }

    pub fn gc(&self) -> &Gc<V> {
        &self.gc
    }

    pub fn ba(&self) -> &Ba {
        &self.ba
    }

    pub fn propose(&mut self, v: V, env: &mut dyn Env<MbaMsg<V>>) -> Result<Option<MbaOutcome<V>>, AgreementError> {
        let graded = self.gc.propose(v, &mut wrap(env, MbaMsg::Gc))?;
        Ok(self.after_gc(graded, env))
    }

    pub fn handle(
        &mut self,
        from: ProcessId,
        msg: MbaMsg<V>,
        env: &mut dyn Env<MbaMsg<V>>,
    ) -> Option<MbaOutcome<V>> {
        match msg {
            MbaMsg::Gc(m) => {
                let graded = self.gc.handle(from, m, &mut wrap(env, MbaMsg::Gc));
                self.after_gc(graded, env)
            }
            MbaMsg::Ba(m) => {
                let b = self.ba.handle(from, m, &mut wrap(env, MbaMsg::Ba));
                self.after_ba(b)
            }
        }
    }

    fn after_gc(&mut self, graded: Option<(V, bool)>, env: &mut dyn Env<MbaMsg<V>>) -> Option<MbaOutcome<V>> {
        let (v, g) = graded?;
        self.adopted = Some(v);
        let b = self.ba.propose(g, &mut wrap(env, MbaMsg::Ba)).expect("graded consensus decides once");
        self.after_ba(b)
    }

    fn after_ba(&mut self, b: Option<bool>) -> Option<MbaOutcome<V>> {
        let b = b?;
        let out = if b {
            MbaOutcome::Value(self.adopted.clone().expect("binary agreement runs after adoption"))
        } else {
            MbaOutcome::Bot
        };
        self.decision = Some(out.clone());
        Some(out)
    }
}

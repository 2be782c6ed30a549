//! Strong multi-valued agreement on digests for `n = 4t + 1`.
//!
//! A process broadcasts its digest through [`Crb`] and proposes its first
//! delivery to a first MBA instance. The outcome of that instance fixes the
//! proposal to a second MBA instance, whose decision is final. When at most
//! two distinct digests are proposed by correct processes the decision is one
//! of them.

use std::sync::Arc;

use thiserror::Error;

use crate::agreement::{AgreementError, Mba, MbaMsg, MbaOutcome};
use crate::codec::{Digest, Kappa};
use crate::crb::{Crb, CrbError, CrbMsg, Slot};
use crate::runtime::{wrap, Env, ProcessId, WireMessage};
use crate::wire::{BitWriter, Encode, WireParams, TAG_BITS};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SmbaError {
    #[error(transparent)]
    Crb(#[from] CrbError),
    #[error(transparent)]
    Agreement(#[from] AgreementError),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SmbaMsg {
    Crb(CrbMsg),
    Mba1(MbaMsg<Slot>),
    Mba2(MbaMsg<Digest>),
}

impl Encode for SmbaMsg {
    fn encode(&self, w: &mut BitWriter, p: &WireParams) {
        match self {
            SmbaMsg::Crb(m) => {
                w.put(0, TAG_BITS);
                m.encode(w, p);
            }
            SmbaMsg::Mba1(m) => {
                w.put(1, TAG_BITS);
                m.encode(w, p);
            }
            SmbaMsg::Mba2(m) => {
                w.put(2, TAG_BITS);
                m.encode(w, p);
            }
        }
    }
}

impl WireMessage for SmbaMsg {
    fn kind(&self) -> &'static str {
        match self {
            SmbaMsg::Crb(m) => m.kind(),
            SmbaMsg::Mba1(m) => m.kind(),
            SmbaMsg::Mba2(m) => m.kind(),
        }
    }

    fn visit_digests(&mut self, f: &mut dyn FnMut(&mut Digest)) {
        match self {
            SmbaMsg::Crb(m) => m.visit_digests(f),
            SmbaMsg::Mba1(m) => m.visit_digests(f),
            SmbaMsg::Mba2(m) => m.visit_digests(f),
        }
    }

    fn tamper(&mut self, salt: u64, p: &WireParams) -> bool {
        match self {
            SmbaMsg::Crb(m) => m.tamper(salt, p),
            SmbaMsg::Mba1(m) => m.tamper(salt, p),
            SmbaMsg::Mba2(m) => m.tamper(salt, p),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Smba {
    default: Digest,
    crb: Crb,
    mba1: Mba<Slot>,
    mba2: Mba<Digest>,
    first: Option<MbaOutcome<Slot>>,
    second_proposal: Option<Digest>,
    decision: Option<Digest>,
}

impl Smba {
    pub fn new(n: usize, t: usize, kappa: Kappa, instance: &str, default: Digest) -> Smba {
        Smba {
            default,
            crb: Crb::new(n, t),
            mba1: Mba::new(n, t, kappa, Arc::from(format!("{instance}/mba1"))),
            mba2: Mba::new(n, t, kappa, Arc::from(format!("{instance}/mba2"))),
            first: None,
            second_proposal: None,
            decision: None,
        }
    }

    pub fn decision(&self) -> Option<Digest> {
        self.decision
    }

    pub fn has_proposed(&self) -> bool {
        self.crb.has_broadcast()
    }

    pub fn crb(&self) -> &Crb {
        &self.crb
    }

    pub fn first_outcome(&self) -> Option<&MbaOutcome<Slot>> {
        self.first.as_ref()
    }

    /// What this process proposed to the second MBA instance, once it has.
    pub fn second_proposal(&self) -> Option<Digest> {
        self.second_proposal
    }

    pub fn propose(&mut self, z: Digest, env: &mut dyn Env<SmbaMsg>) -> Result<Option<Digest>, SmbaError> {
        let delivered = self.crb.broadcast(z, &mut wrap(env, SmbaMsg::Crb))?;
        Ok(self.on_delivery(delivered, env))
    }

    pub fn handle(&mut self, from: ProcessId, msg: SmbaMsg, env: &mut dyn Env<SmbaMsg>) -> Option<Digest> {
        match msg {
            SmbaMsg::Crb(m) => {
                let delivered = self.crb.handle(from, m, &mut wrap(env, SmbaMsg::Crb));
                self.on_delivery(delivered, env)
            }
            SmbaMsg::Mba1(m) => {
                let out = self.mba1.handle(from, m, &mut wrap(env, SmbaMsg::Mba1));
                self.on_first(out, env)
            }
            SmbaMsg::Mba2(m) => {
                let out = self.mba2.handle(from, m, &mut wrap(env, SmbaMsg::Mba2));
                self.on_second(out)
            }
        }
    }

    fn on_delivery(&mut self, delivered: Vec<Slot>, env: &mut dyn Env<SmbaMsg>) -> Option<Digest> {
        if delivered.is_empty() {
            return None;
        }
        if !self.mba1.has_proposed() {
            let first = self.crb.delivered()[0];
            let out = self.mba1.propose(first, &mut wrap(env, SmbaMsg::Mba1)).expect("first proposal");
            if let Some(d) = self.on_first(out, env) {
                return Some(d);
            }
        }
        self.try_second(env)
    }

    fn on_first(&mut self, out: Option<MbaOutcome<Slot>>, env: &mut dyn Env<SmbaMsg>) -> Option<Digest> {
        if let Some(o) = out {
            self.first = Some(o);
        }
        self.try_second(env)
    }

    fn try_second(&mut self, env: &mut dyn Env<SmbaMsg>) -> Option<Digest> {
        if self.second_proposal.is_some() {
            return None;
        }
        let z = match self.first.as_ref()? {
            MbaOutcome::Value(Slot::Digest(z)) => *z,
            MbaOutcome::Value(Slot::BotCrb) => self.default,
            MbaOutcome::Bot => {
                let delivered = self.crb.delivered();
                if delivered.len() < 2 {
                    return None;
                }
                delivered.iter().filter_map(Slot::digest).min().expect("at most one escape delivery")
            }
        };
        self.second_proposal = Some(z);
        let out = self.mba2.propose(z, &mut wrap(env, SmbaMsg::Mba2)).expect("second proposal");
        self.on_second(out)
    }

    fn on_second(&mut self, out: Option<MbaOutcome<Digest>>) -> Option<Digest> {
        let d = match out? {
            MbaOutcome::Value(z) => z,
            MbaOutcome::Bot => self.default,
        };
        self.decision = Some(d);
        Some(d)
    }
}

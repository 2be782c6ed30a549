//! Graded consensus for `n > 3t`.
//!
//! Three message phases:
//!
//! 1. **Support.** A process sends `Init(v)` for its proposal; this is the only
//!    message that carries a value, everything later names values by
//!    fingerprint. Any item supported by `t + 1` processes is relayed with
//!    `Echo`, and an item supported by `2t + 1` is *approved*. A process whose received proposals
//!    show that no value can be unanimous among correct processes (for every
//!    value, `t + 1` senders proposed something else) supports the special
//!    item `Bail`. Every correct process eventually approves some item, and an
//!    approval at one correct process eventually happens at all of them.
//! 2. **Approve.** Each process announces its first approved item. Once `n - t`
//!    announcements name items it approved itself, it sends `Vote(w)` if they
//!    all name the same value `w`, and `Vote(⊥)` otherwise. At most one value
//!    is voted for by correct processes.
//! 3. **Decide.** `n - t` votes for an approved `w` give `(w, 1)`. Otherwise,
//!    once it has seen that correct processes disagree (it approved `Bail` or
//!    two items) and holds `n - t` votes all of which are `⊥` or a single
//!    approved `w`, it decides `(w, 0)`, or `(own proposal, 0)` if those votes
//!    are all `⊥`. A value that is voted for always has a correct proposer,
//!    so a process that lacks it waits for that proposer's `Init`.

use std::collections::{BTreeMap, BTreeSet};

use super::{quorum, AgreementError, Payload};
use crate::codec::{Digest, Kappa};
use crate::runtime::{Env, ProcessId, WireMessage};
use crate::wire::{BitWriter, Encode, WireParams, TAG_BITS, TAG_BOT_ITEM, TAG_NONE, TAG_SOME};

/// A supportable item: a value named by its fingerprint, or the escape item.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ItemRef {
    Val(Digest),
    Bail,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum GcMsg<V> {
    Init(V),
    Echo(ItemRef),
    Approve(ItemRef),
    Vote(Option<Digest>),
}

impl ItemRef {
    fn digest_mut(&mut self) -> Option<&mut Digest> {
        match self {
            ItemRef::Val(d) => Some(d),
            ItemRef::Bail => None,
        }
    }
}

impl<V: Payload> WireMessage for GcMsg<V> {
    fn kind(&self) -> &'static str {
        match self {
            GcMsg::Init(_) => "gc-init",
            GcMsg::Echo(_) => "gc-echo",
            GcMsg::Approve(_) => "gc-approve",
            GcMsg::Vote(_) => "gc-vote",
        }
    }

    fn visit_digests(&mut self, f: &mut dyn FnMut(&mut Digest)) {
        match self {
            GcMsg::Init(v) => v.visit_digests(f),
            GcMsg::Echo(r) | GcMsg::Approve(r) => {
                if let Some(d) = r.digest_mut() {
                    f(d)
                }
            }
            GcMsg::Vote(Some(d)) => f(d),
            GcMsg::Vote(None) => {}
        }
    }

    fn tamper(&mut self, salt: u64, p: &WireParams) -> bool {
        let d = match self {
            GcMsg::Init(v) => return v.tamper(salt, p.kappa),
            GcMsg::Echo(r) | GcMsg::Approve(r) => r.digest_mut(),
            GcMsg::Vote(v) => v.as_mut(),
        };
        match d {
            Some(d) => {
                d.flip_bit(p.kappa, (salt % p.kappa.bits() as u64) as usize);
                true
            }
            None => false,
        }
    }
}

impl Encode for ItemRef {
    fn encode(&self, w: &mut BitWriter, p: &WireParams) {
        match self {
            ItemRef::Val(d) => {
                w.put(TAG_SOME, TAG_BITS);
                d.encode(w, p);
            }
            ItemRef::Bail => w.put(TAG_BOT_ITEM, TAG_BITS),
        }
    }
}

impl<V: Encode> Encode for GcMsg<V> {
    fn encode(&self, w: &mut BitWriter, p: &WireParams) {
        match self {
            GcMsg::Init(v) => {
                w.put(0, TAG_BITS);
                v.encode(w, p);
            }
            GcMsg::Echo(r) => {
                w.put(1, TAG_BITS);
                r.encode(w, p);
            }
            GcMsg::Approve(r) => {
                w.put(2, TAG_BITS);
                r.encode(w, p);
            }
            GcMsg::Vote(v) => {
                w.put(3, TAG_BITS);
                match v {
                    Some(d) => {
                        w.put(TAG_SOME, TAG_BITS);
                        d.encode(w, p);
                    }
                    None => w.put(TAG_NONE, TAG_BITS),
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Gc<V> {
    n: usize,
    t: usize,
    kappa: Kappa,
    proposal: Option<V>,
    init_from: BTreeMap<ProcessId, Digest>,
    init_count: BTreeMap<Digest, usize>,
    values: BTreeMap<Digest, V>,
    support: BTreeMap<ItemRef, BTreeSet<ProcessId>>,
    supported: BTreeSet<ItemRef>,
    approved: Vec<ItemRef>,
    approve_from: BTreeMap<ProcessId, ItemRef>,
    approve_sent: bool,
    vote_from: BTreeMap<ProcessId, Option<Digest>>,
    vote_sent: bool,
    decision: Option<(V, bool)>,
}

impl<V: Payload> Gc<V> {
    pub fn new(n: usize, t: usize, kappa: Kappa) -> Gc<V> {
        assert!(n > 3 * t, "graded consensus needs n > 3t");
        Gc {
            n,
            t,
            kappa,
            proposal: None,
            init_from: BTreeMap::new(),
            init_count: BTreeMap::new(),
            values: BTreeMap::new(),
            support: BTreeMap::new(),
            supported: BTreeSet::new(),
            approved: Vec::new(),
            approve_from: BTreeMap::new(),
            approve_sent: false,
            vote_from: BTreeMap::new(),
            vote_sent: false,
            decision: None,
        }
    }

    pub fn has_proposed(&self) -> bool {
        self.proposal.is_some()
    }

    pub fn decision(&self) -> Option<&(V, bool)> {
        self.decision.as_ref()
    }

    /// Items approved so far, in approval order.
    pub fn approved(&self) -> &[ItemRef] {
        &self.approved
    }

    pub fn value_of(&self, fp: &Digest) -> Option<&V> {
        self.values.get(fp)
    }

    pub fn propose(&mut self, v: V, env: &mut dyn Env<GcMsg<V>>) -> Result<Option<(V, bool)>, AgreementError> {
        if self.proposal.is_some() {
            return Err(AgreementError::ProtocolMisuse("graded consensus proposed twice"));
        }
        let fp = v.fingerprint(self.kappa);
        self.values.entry(fp).or_insert_with(|| v.clone());
        self.supported.insert(ItemRef::Val(fp));
        self.proposal = Some(v.clone());
        env.broadcast(GcMsg::Init(v));
        Ok(self.progress(env))
    }

    pub fn handle(&mut self, from: ProcessId, msg: GcMsg<V>, env: &mut dyn Env<GcMsg<V>>) -> Option<(V, bool)> {
        match msg {
            GcMsg::Init(v) => {
                if self.init_from.contains_key(&from) {
                    return None;
                }
                let fp = v.fingerprint(self.kappa);
                self.values.entry(fp).or_insert(v);
                self.init_from.insert(from, fp);
                *self.init_count.entry(fp).or_default() += 1;
                self.support.entry(ItemRef::Val(fp)).or_default().insert(from);
            }
            GcMsg::Echo(r) => {
                self.support.entry(r).or_default().insert(from);
            }
            GcMsg::Approve(r) => {
                self.approve_from.entry(from).or_insert(r);
            }
            GcMsg::Vote(v) => {
                self.vote_from.entry(from).or_insert(v);
            }
        }
        if self.proposal.is_none() {
            return None;
        }
        self.progress(env)
    }

    fn disagreement_evident(&self) -> bool {
        let received = self.init_from.len();
        let top = self.init_count.values().copied().max().unwrap_or(0);
        received >= top + self.t + 1
    }

    fn is_approved(&self, r: &ItemRef) -> bool {
        self.approved.contains(r)
    }

    fn progress(&mut self, env: &mut dyn Env<GcMsg<V>>) -> Option<(V, bool)> {
        let (n, t) = (self.n, self.t);
        let relays: Vec<ItemRef> = self
            .support
            .iter()
            .filter(|(r, s)| s.len() > t && !self.supported.contains(r))
            .map(|(r, _)| *r)
            .collect();
        for r in relays {
            self.supported.insert(r);
            env.broadcast(GcMsg::Echo(r));
        }
        if !self.supported.contains(&ItemRef::Bail) && self.disagreement_evident() {
            self.supported.insert(ItemRef::Bail);
            env.broadcast(GcMsg::Echo(ItemRef::Bail));
        }
        for (r, s) in &self.support {
            if s.len() > 2 * t && !self.approved.contains(r) {
                self.approved.push(*r);
            }
        }
        if !self.approve_sent {
            let Some(first) = self.approved.first().copied() else {
                return None;
            };
            self.approve_sent = true;
            env.broadcast(GcMsg::Approve(first));
        }
        if !self.vote_sent {
            let accepted: Vec<ItemRef> =
                self.approve_from.values().filter(|r| self.is_approved(r)).copied().collect();
            if accepted.len() < quorum(n, t) {
                return None;
            }
            let vals: BTreeSet<ItemRef> = accepted.into_iter().collect();
            let vote = match (vals.len(), vals.first()) {
                (1, Some(ItemRef::Val(fp))) => Some(*fp),
                _ => None,
            };
            self.vote_sent = true;
            env.broadcast(GcMsg::Vote(vote));
        }
        if self.decision.is_some() {
            return None;
        }
        let d = self.try_decide()?;
        self.decision = Some(d.clone());
        Some(d)
    }

    fn try_decide(&self) -> Option<(V, bool)> {
        let q = quorum(self.n, self.t);
        let mut counts: BTreeMap<Digest, usize> = BTreeMap::new();
        let mut none = 0usize;
        for v in self.vote_from.values() {
            match v {
                Some(fp) if self.is_approved(&ItemRef::Val(*fp)) => *counts.entry(*fp).or_default() += 1,
                Some(_) => {}
                None => none += 1,
            }
        }
        if let Some((fp, _)) = counts.iter().find(|(_, &c)| c >= q) {
            return self.values.get(fp).map(|v| (v.clone(), true));
        }
        let evident = self.is_approved(&ItemRef::Bail) || self.approved.len() >= 2;
        if !evident {
            return None;
        }
        let best = counts
            .iter()
            .filter(|(_, &c)| c + none >= q)
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)));
        if let Some((fp, _)) = best {
            return self.values.get(fp).map(|v| (v.clone(), false));
        }
        if none >= q {
            return Some((self.proposal.clone().expect("proposed"), false));
        }
        None
    }
}

//! Collective reliable broadcast of digests for `n = 4t + 1`.
//!
//! Every process broadcasts one digest. A digest is delivered through the
//! usual echo/ready amplification. When the received inputs are too
//! fragmented for any digest to gather enough support, processes agree on the
//! escape value [`Slot::BotCrb`] instead. A process may deliver several
//! digests and the escape value, each at most once.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::codec::{cro_hash, Digest, Kappa};
use crate::runtime::{Env, ProcessId, WireMessage};
use crate::wire::{BitWriter, Encode, WireParams, TAG_BITS, TAG_BOT_CRB, TAG_SOME};
use crate::agreement::Payload;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum CrbError {
    #[error("protocol misuse: {0}")]
    ProtocolMisuse(&'static str),
}

/// A broadcast outcome: a digest or the escape value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    Digest(Digest),
    BotCrb,
}

impl Slot {
    pub fn digest(&self) -> Option<Digest> {
        match self {
            Slot::Digest(d) => Some(*d),
            Slot::BotCrb => None,
        }
    }
}

impl Encode for Slot {
    fn encode(&self, w: &mut BitWriter, p: &WireParams) {
        match self {
            Slot::Digest(d) => {
                w.put(TAG_SOME, TAG_BITS);
                d.encode(w, p);
            }
            Slot::BotCrb => w.put(TAG_BOT_CRB, TAG_BITS),
        }
    }
}

impl Payload for Slot {
    fn fingerprint(&self, kappa: Kappa) -> Digest {
        match self {
            Slot::Digest(d) => {
                let mut buf = vec![b's'];
                buf.extend_from_slice(d.as_bytes(kappa));
                cro_hash(kappa, &buf)
            }
            Slot::BotCrb => cro_hash(kappa, b"s-bot"),
        }
    }

    fn visit_digests(&mut self, f: &mut dyn FnMut(&mut Digest)) {
        if let Slot::Digest(d) = self {
            f(d)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CrbMsg {
    Init(Digest),
    Echo(Digest),
    Ready(Digest),
    Broken,
}

impl Encode for CrbMsg {
    fn encode(&self, w: &mut BitWriter, p: &WireParams) {
        match self {
            CrbMsg::Init(d) | CrbMsg::Echo(d) | CrbMsg::Ready(d) => {
                let tag = match self {
                    CrbMsg::Init(_) => 0,
                    CrbMsg::Echo(_) => 1,
                    _ => 2,
                };
                w.put(tag, TAG_BITS);
                d.encode(w, p);
            }
            CrbMsg::Broken => w.put(3, TAG_BITS),
        }
    }
}

impl WireMessage for CrbMsg {
    fn kind(&self) -> &'static str {
        match self {
            CrbMsg::Init(_) => "crb-init",
            CrbMsg::Echo(_) => "crb-echo",
            CrbMsg::Ready(_) => "crb-ready",
            CrbMsg::Broken => "crb-broken",
        }
    }

    fn visit_digests(&mut self, f: &mut dyn FnMut(&mut Digest)) {
        match self {
            CrbMsg::Init(d) | CrbMsg::Echo(d) | CrbMsg::Ready(d) => f(d),
            CrbMsg::Broken => {}
        }
    }

    fn tamper(&mut self, salt: u64, p: &WireParams) -> bool {
        match self {
            CrbMsg::Init(d) | CrbMsg::Echo(d) | CrbMsg::Ready(d) => {
                d.flip_bit(p.kappa, (salt % p.kappa.bits() as u64) as usize);
                true
            }
            CrbMsg::Broken => false,
        }
    }
}

/// Number of distinct digests with a positive count.
pub fn distinct(num: &BTreeMap<Digest, usize>) -> usize {
    num.values().filter(|&&c| c > 0).count()
}

/// Greatest `x` such that the `x` smallest positive counts sum to at most `t`.
pub fn eliminated(num: &BTreeMap<Digest, usize>, t: usize) -> usize {
    let mut counts: Vec<(usize, Digest)> = num.iter().filter(|(_, &c)| c > 0).map(|(d, &c)| (c, *d)).collect();
    counts.sort();
    let mut sum = 0;
    let mut x = 0;
    for (c, _) in counts {
        sum += c;
        if sum > t {
            break;
        }
        x += 1;
    }
    x
}

#[derive(Clone, Debug)]
pub struct Crb {
    n: usize,
    t: usize,
    input: Option<Digest>,
    init_from: BTreeMap<ProcessId, Digest>,
    num: BTreeMap<Digest, usize>,
    echo_from: BTreeMap<Digest, BTreeSet<ProcessId>>,
    ready_from: BTreeMap<Digest, BTreeSet<ProcessId>>,
    broken_from: BTreeSet<ProcessId>,
    echoed: BTreeSet<Digest>,
    readied: BTreeSet<Digest>,
    broken_sent: bool,
    delivered: Vec<Slot>,
}

impl Crb {
    pub fn new(n: usize, t: usize) -> Crb {
        assert_eq!(n, 4 * t + 1, "collective reliable broadcast needs n = 4t + 1");
        Crb {
            n,
            t,
            input: None,
            init_from: BTreeMap::new(),
            num: BTreeMap::new(),
            echo_from: BTreeMap::new(),
            ready_from: BTreeMap::new(),
            broken_from: BTreeSet::new(),
            echoed: BTreeSet::new(),
            readied: BTreeSet::new(),
            broken_sent: false,
            delivered: Vec::new(),
        }
    }

    pub fn has_broadcast(&self) -> bool {
        self.input.is_some()
    }

    /// Deliveries so far, in delivery order.
    pub fn delivered(&self) -> &[Slot] {
        &self.delivered
    }

    pub fn counts(&self) -> &BTreeMap<Digest, usize> {
        &self.num
    }

    pub fn broadcast(&mut self, z: Digest, env: &mut dyn Env<CrbMsg>) -> Result<Vec<Slot>, CrbError> {
        if self.input.is_some() {
            return Err(CrbError::ProtocolMisuse("broadcast twice"));
        }
        self.input = Some(z);
        env.broadcast(CrbMsg::Init(z));
        Ok(self.progress(env))
    }

    pub fn handle(&mut self, from: ProcessId, msg: CrbMsg, env: &mut dyn Env<CrbMsg>) -> Vec<Slot> {
        match msg {
            CrbMsg::Init(z) => {
                if self.init_from.contains_key(&from) {
                    return Vec::new();
                }
                self.init_from.insert(from, z);
                *self.num.entry(z).or_default() += 1;
            }
            CrbMsg::Echo(z) => {
                self.echo_from.entry(z).or_default().insert(from);
            }
            CrbMsg::Ready(z) => {
                self.ready_from.entry(z).or_default().insert(from);
            }
            CrbMsg::Broken => {
                self.broken_from.insert(from);
            }
        }
        if self.input.is_none() {
            return Vec::new();
        }
        self.progress(env)
    }

    fn progress(&mut self, env: &mut dyn Env<CrbMsg>) -> Vec<Slot> {
        let t = self.t;
        let mut out = Vec::new();
        let echo: Vec<Digest> =
            self.num.iter().filter(|(z, &c)| c > t && !self.echoed.contains(z)).map(|(z, _)| *z).collect();
        for z in echo {
            self.echoed.insert(z);
            env.broadcast(CrbMsg::Echo(z));
        }
        let mut ready: BTreeSet<Digest> =
            self.echo_from.iter().filter(|(_, s)| s.len() > 2 * t).map(|(z, _)| *z).collect();
        ready.extend(self.ready_from.iter().filter(|(_, s)| s.len() > t).map(|(z, _)| *z));
        for z in ready {
            if self.readied.insert(z) {
                env.broadcast(CrbMsg::Ready(z));
            }
        }
        for (z, s) in &self.ready_from {
            let slot = Slot::Digest(*z);
            if s.len() > 2 * t && !self.delivered.contains(&slot) {
                self.delivered.push(slot);
                out.push(slot);
            }
        }
        if !self.broken_sent {
            let fragmented = self.init_from.len() >= self.n - t
                && distinct(&self.num) >= eliminated(&self.num, t) + 3;
            if fragmented || self.broken_from.len() > t {
                self.broken_sent = true;
                env.broadcast(CrbMsg::Broken);
            }
        }
        if self.broken_from.len() > 2 * t && !self.delivered.contains(&Slot::BotCrb) {
            self.delivered.push(Slot::BotCrb);
            out.push(Slot::BotCrb);
        }
        out
    }
}

//! Randomized binary agreement for `n > 3t` driven by the common coin.
//!
//! Each round runs a binary-value broadcast (`Bval`, relayed on `t + 1` and
//! accepted on `2t + 1`) followed by one `Aux` per process. After `n - t`
//! `Aux` messages carrying accepted values, the round coin is read. A process
//! that saw a single value `b` keeps it, and decides it if `b` equals the coin.
//! Otherwise it adopts the coin.
//!
//! A process that decided `b` in round `r` keeps running until it completes
//! the first later round whose coin is `b`. By then every correct process has
//! decided, so nobody waits on it afterwards.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::{quorum, AgreementError};
use crate::coin::CoinTag;
use crate::runtime::{Env, ProcessId, WireMessage};
use crate::wire::{BitWriter, Encode, WireParams, ROUND_BITS, TAG_BITS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BaMsg {
    Bval { r: u32, b: bool },
    Aux { r: u32, b: bool },
}

impl WireMessage for BaMsg {
    fn kind(&self) -> &'static str {
        match self {
            BaMsg::Bval { .. } => "ba-bval",
            BaMsg::Aux { .. } => "ba-aux",
        }
    }

    fn tamper(&mut self, _salt: u64, _p: &WireParams) -> bool {
        match self {
            BaMsg::Bval { b, .. } | BaMsg::Aux { b, .. } => *b = !*b,
        }
        true
    }
}

impl Encode for BaMsg {
    fn encode(&self, w: &mut BitWriter, _p: &WireParams) {
        let (tag, r, b) = match *self {
            BaMsg::Bval { r, b } => (0, r, b),
            BaMsg::Aux { r, b } => (1, r, b),
        };
        w.put(tag, TAG_BITS);
        w.put(r as u64, ROUND_BITS);
        w.put(b as u64, 1);
    }
}

#[derive(Clone, Debug, Default)]
struct Round {
    bval_from: [BTreeSet<ProcessId>; 2],
    bval_sent: [bool; 2],
    bin: [bool; 2],
    aux_from: BTreeMap<ProcessId, bool>,
    aux_sent: bool,
}

#[derive(Clone, Debug)]
pub struct Ba {
    n: usize,
    t: usize,
    instance: Arc<str>,
    est: Option<bool>,
    round: u32,
    rounds: BTreeMap<u32, Round>,
    decision: Option<(bool, u32)>,
    halted: bool,
}

impl Ba {
    pub fn new(n: usize, t: usize, instance: Arc<str>) -> Ba {
        assert!(n > 3 * t, "binary agreement needs n > 3t");
        Ba { n, t, instance, est: None, round: 0, rounds: BTreeMap::new(), decision: None, halted: false }
    }

    pub fn decision(&self) -> Option<bool> {
        self.decision.map(|d| d.0)
    }

    /// Round in which the decision was reached.
    pub fn decision_round(&self) -> Option<u32> {
        self.decision.map(|d| d.1)
    }

    /// Rounds started so far.
    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn halted(&self) -> bool {
        self.halted
    }

    pub fn has_proposed(&self) -> bool {
        self.est.is_some()
    }

    pub fn propose(&mut self, b: bool, env: &mut dyn Env<BaMsg>) -> Result<Option<bool>, AgreementError> {
        if self.est.is_some() {
            return Err(AgreementError::ProtocolMisuse("binary agreement proposed twice"));
        }
        self.est = Some(b);
        self.begin_round(1, b, env);
        Ok(self.progress(env))
    }

    pub fn handle(&mut self, from: ProcessId, msg: BaMsg, env: &mut dyn Env<BaMsg>) -> Option<bool> {
        match msg {
            BaMsg::Bval { r, b } => {
                self.rounds.entry(r).or_default().bval_from[b as usize].insert(from);
            }
            BaMsg::Aux { r, b } => {
                self.rounds.entry(r).or_default().aux_from.entry(from).or_insert(b);
            }
        }
        let r = match msg {
            BaMsg::Bval { r, .. } | BaMsg::Aux { r, .. } => r,
        };
        if self.est.is_none() || r > self.round {
            return None;
        }
        self.update(r, env);
        if r < self.round {
            return None;
        }
        self.progress(env)
    }

    fn begin_round(&mut self, r: u32, est: bool, env: &mut dyn Env<BaMsg>) {
        self.round = r;
        let st = self.rounds.entry(r).or_default();
        st.bval_sent[est as usize] = true;
        env.broadcast(BaMsg::Bval { r, b: est });
    }

    /// Relays and accepts binary values for round `r`; sends `Aux` if `r` is current.
    fn update(&mut self, r: u32, env: &mut dyn Env<BaMsg>) {
        let t = self.t;
        let current = r == self.round;
        let st = self.rounds.entry(r).or_default();
        for b in [false, true] {
            let i = b as usize;
            let c = st.bval_from[i].len();
            if c > t && !st.bval_sent[i] {
                st.bval_sent[i] = true;
                env.broadcast(BaMsg::Bval { r, b });
            }
            if c > 2 * t && !st.bin[i] {
                st.bin[i] = true;
                if current && !st.aux_sent {
                    st.aux_sent = true;
                    env.broadcast(BaMsg::Aux { r, b });
                }
            }
        }
    }

    fn progress(&mut self, env: &mut dyn Env<BaMsg>) -> Option<bool> {
        let mut newly = None;
        while !self.halted {
            let r = self.round;
            self.update(r, env);
            let st = &self.rounds[&r];
            if !st.aux_sent {
                break;
            }
            let good: Vec<bool> = st.aux_from.values().copied().filter(|b| st.bin[*b as usize]).collect();
            if good.len() < quorum(self.n, self.t) {
                break;
            }
            let vals: BTreeSet<bool> = good.into_iter().collect();
            let coin = env.coin(&CoinTag::ba_round(&self.instance, r)).as_bit();
            let est = if vals.len() == 1 {
                let b = *vals.first().unwrap();
                if b == coin && self.decision.is_none() {
                    self.decision = Some((b, r));
                    newly = Some(b);
                }
                b
            } else {
                coin
            };
            if let Some((d, rd)) = self.decision {
                if rd < r && coin == d {
                    self.halted = true;
                    break;
                }
            }
            self.est = Some(est);
            self.begin_round(r + 1, est, env);
        }
        newly
    }
}

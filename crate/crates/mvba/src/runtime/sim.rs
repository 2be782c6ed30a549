use std::collections::BTreeSet;

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AdversaryScript, Automaton, Behavior, Env, ProcessId, Retraction, ScriptError, WireMessage};
use crate::coin::{CoinOracle, CoinTag, CoinValue};
use crate::wire::{Encode, WireParams};

const HISTORY_CAP: usize = 512;

#[derive(Clone, Copy, Debug)]
pub struct SimConfig {
    pub n: usize,
    pub t: usize,
    pub seed: u64,
    pub wire: WireParams,
}

#[derive(Clone, Debug)]
pub struct Envelope<M> {
    pub sender: ProcessId,
    pub receiver: ProcessId,
    pub payload: M,
    pub bits: u64,
    pub depth: u64,
    pub seq: u64,
    enqueued_at: u64,
}

/// What happened during one call to [`Simulation::step`].
#[derive(Debug)]
pub struct StepReport<O> {
    pub step: u64,
    pub sender: ProcessId,
    pub receiver: ProcessId,
    pub kind: &'static str,
    pub depth: u64,
    pub outputs: Vec<O>,
    /// Processes corrupted as a consequence of this step.
    pub corrupted: Vec<ProcessId>,
}

struct NetEnv<'a, M> {
    me: ProcessId,
    n: usize,
    t: usize,
    out: &'a mut Vec<(Option<ProcessId>, M)>,
    coins: &'a mut CoinOracle,
}

impl<M> Env<M> for NetEnv<'_, M> {
    fn me(&self) -> ProcessId {
        self.me
    }
    fn n(&self) -> usize {
        self.n
    }
    fn t(&self) -> usize {
        self.t
    }
    fn send(&mut self, to: ProcessId, msg: M) {
        self.out.push((Some(to), msg));
    }
    fn broadcast(&mut self, msg: M) {
        self.out.push((None, msg));
    }
    fn coin(&mut self, tag: &CoinTag) -> CoinValue {
        self.coins.query(tag, self.me)
    }
}

pub struct Simulation<A: Automaton> {
    cfg: SimConfig,
    procs: Vec<A>,
    corrupted_at: Vec<Option<u64>>,
    script: AdversaryScript,
    fired: Vec<bool>,
    coins: CoinOracle,
    pending: IndexMap<u64, Envelope<A::Msg>>,
    by_age: BTreeSet<u64>,
    sched_rng: ChaCha8Rng,
    adv_rng: ChaCha8Rng,
    step: u64,
    next_seq: u64,
    recv_depth: Vec<u64>,
    messages: u64,
    bits: u64,
    retracted: u64,
    skipped_triggers: u64,
    history: Vec<Vec<(ProcessId, A::Msg)>>,
    outbox: Vec<(Option<ProcessId>, A::Msg)>,
    started: bool,
}

impl<A: Automaton> Simulation<A> {
    pub fn new(
        cfg: SimConfig,
        procs: Vec<A>,
        script: AdversaryScript,
        coins: CoinOracle,
    ) -> Result<Simulation<A>, ScriptError> {
        if procs.len() != cfg.n {
            return Err(ScriptError::Invalid(format!("expected {} automata, got {}", cfg.n, procs.len())));
        }
        script.validate(cfg.n, cfg.t)?;
        let mut corrupted_at = vec![None; cfg.n];
        for p in &script.static_corrupt {
            corrupted_at[p.idx()] = Some(0);
        }
        let fired = vec![false; script.triggers.len()];
        Ok(Simulation {
            sched_rng: ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_5c4e_d01e_0001),
            adv_rng: ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xad0e_45a1_2000_0002),
            cfg,
            procs,
            corrupted_at,
            script,
            fired,
            coins,
            pending: IndexMap::new(),
            by_age: BTreeSet::new(),
            step: 0,
            next_seq: 0,
            recv_depth: vec![0; cfg.n],
            messages: 0,
            bits: 0,
            retracted: 0,
            skipped_triggers: 0,
            history: vec![Vec::new(); cfg.n],
            outbox: Vec::new(),
            started: false,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn coins(&self) -> &CoinOracle {
        &self.coins
    }

    pub fn process(&self, p: ProcessId) -> &A {
        &self.procs[p.idx()]
    }

    pub fn into_processes(self) -> Vec<A> {
        self.procs
    }

    pub fn is_corrupted(&self, p: ProcessId) -> bool {
        self.corrupted_at[p.idx()].is_some()
    }

    /// Step at which `p` was corrupted (0 for static corruption).
    pub fn corrupted_at(&self, p: ProcessId) -> Option<u64> {
        self.corrupted_at[p.idx()]
    }

    pub fn corrupted(&self) -> Vec<ProcessId> {
        ProcessId::all(self.cfg.n).filter(|&p| self.is_corrupted(p)).collect()
    }

    pub fn depth_of(&self, p: ProcessId) -> u64 {
        self.recv_depth[p.idx()]
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Envelopes sent by uncorrupted processes to other processes.
    pub fn total_messages(&self) -> u64 {
        self.messages
    }

    pub fn total_bits(&self) -> u64 {
        self.bits
    }

    pub fn retracted(&self) -> u64 {
        self.retracted
    }

    pub fn pending(&self) -> usize {
        self.pending.len()
    }

    /// Triggers that fired after the corruption budget was exhausted.
    pub fn skipped_triggers(&self) -> u64 {
        self.skipped_triggers
    }

    /// Run every automaton's start handler in process order.
    pub fn start(&mut self) -> Vec<(ProcessId, Vec<A::Out>)> {
        assert!(!self.started, "simulation already started");
        self.started = true;
        let mut all = Vec::with_capacity(self.cfg.n);
        for p in ProcessId::all(self.cfg.n) {
            let mut outs = Vec::new();
            let mut buf = std::mem::take(&mut self.outbox);
            {
                let mut env = NetEnv { me: p, n: self.cfg.n, t: self.cfg.t, out: &mut buf, coins: &mut self.coins };
                self.procs[p.idx()].start(&mut env, &mut outs);
            }
            self.dispatch(p, &mut buf);
            self.outbox = buf;
            all.push((p, outs));
        }
        self.run_triggers();
        all
    }

    fn pick(&mut self) -> Option<u64> {
        if self.pending.is_empty() {
            return None;
        }
        if let (Some(cap), Some(&oldest)) = (self.script.schedule.age_cap, self.by_age.first()) {
            if self.step.saturating_sub(self.pending[&oldest].enqueued_at) > cap {
                return Some(oldest);
            }
        }
        if self.script.schedule.rules.is_empty() {
            let i = self.sched_rng.random_range(0..self.pending.len());
            return Some(*self.pending.get_index(i).unwrap().0);
        }
        let weights: Vec<f64> = self
            .pending
            .values()
            .map(|e| self.script.schedule.weight(e.sender, e.receiver, e.payload.kind()))
            .collect();
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return self.by_age.first().copied();
        }
        let mut r = self.sched_rng.random::<f64>() * total;
        for (i, w) in weights.iter().enumerate() {
            if r < *w {
                return Some(*self.pending.get_index(i).unwrap().0);
            }
            r -= w;
        }
        Some(*self.pending.last().unwrap().0)
    }

    /// Deliver one envelope. Returns `None` when the network is quiescent.
    pub fn step(&mut self) -> Option<StepReport<A::Out>> {
        assert!(self.started, "call start() first");
        let seq = self.pick()?;
        let env = self.pending.swap_remove(&seq).unwrap();
        self.by_age.remove(&seq);
        self.step += 1;
        let to = env.receiver;
        let d = &mut self.recv_depth[to.idx()];
        *d = (*d).max(env.depth);
        let kind = env.payload.kind();
        let mut outs = Vec::new();
        let mut buf = std::mem::take(&mut self.outbox);
        {
            let mut net = NetEnv { me: to, n: self.cfg.n, t: self.cfg.t, out: &mut buf, coins: &mut self.coins };
            self.procs[to.idx()].handle(env.sender, env.payload, &mut net, &mut outs);
        }
        self.dispatch(to, &mut buf);
        self.outbox = buf;
        let corrupted = self.run_triggers();
        Some(StepReport {
            step: self.step,
            sender: env.sender,
            receiver: to,
            kind,
            depth: self.recv_depth[to.idx()],
            outputs: outs,
            corrupted,
        })
    }

    fn enqueue(&mut self, from: ProcessId, to: ProcessId, payload: A::Msg, bits: u64) {
        let depth = if from == to { self.recv_depth[from.idx()] } else { self.recv_depth[from.idx()] + 1 };
        if from != to && !self.is_corrupted(from) {
            self.messages += 1;
            self.bits += bits;
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.pending.insert(
            seq,
            Envelope { sender: from, receiver: to, payload, bits, depth, seq, enqueued_at: self.step },
        );
        self.by_age.insert(seq);
    }

    fn dispatch(&mut self, from: ProcessId, buf: &mut Vec<(Option<ProcessId>, A::Msg)>) {
        let n = self.cfg.n;
        let byz = self.is_corrupted(from);
        for (dest, msg) in buf.drain(..) {
            let bits = if byz { 0 } else { msg.bits(&self.cfg.wire) };
            let targets: Vec<ProcessId> = match dest {
                Some(p) => vec![p],
                None => ProcessId::all(n).collect(),
            };
            for to in targets {
                if byz {
                    self.send_byzantine(from, to, msg.clone());
                } else {
                    self.enqueue(from, to, msg.clone(), bits);
                }
            }
        }
    }

    fn send_byzantine(&mut self, from: ProcessId, to: ProcessId, mut msg: A::Msg) {
        let mut replay = None;
        for b in &self.script.behaviors {
            match b {
                Behavior::Crash => return,
                Behavior::SilentOn(kinds) => {
                    if kinds.iter().any(|k| k == msg.kind()) {
                        return;
                    }
                }
                Behavior::Equivocate { digests, kinds } => {
                    if kinds.is_empty() || kinds.iter().any(|k| k == msg.kind()) {
                        let pick = digests[to.idx() % digests.len()];
                        msg.visit_digests(&mut |d| *d = pick);
                    }
                }
                Behavior::Mutate { probability } => {
                    if self.adv_rng.random_bool(*probability) {
                        let salt = self.adv_rng.random();
                        msg.tamper(salt, &self.cfg.wire);
                    }
                }
                Behavior::Replay { probability } => {
                    let h = &self.history[from.idx()];
                    if !h.is_empty() && self.adv_rng.random_bool(*probability) {
                        let i = self.adv_rng.random_range(0..h.len());
                        replay = Some(h[i].clone());
                    }
                }
            }
        }
        let h = &mut self.history[from.idx()];
        if h.len() < HISTORY_CAP {
            h.push((to, msg.clone()));
        }
        let bits = msg.bits(&self.cfg.wire);
        self.enqueue(from, to, msg, bits);
        if let Some((rto, rmsg)) = replay {
            let bits = rmsg.bits(&self.cfg.wire);
            self.enqueue(from, rto, rmsg, bits);
        }
    }

    /// Corrupt `p` now and apply a retraction to its undelivered envelopes.
    pub fn corrupt(&mut self, p: ProcessId, retract: &Retraction) -> Result<(), ScriptError> {
        if self.is_corrupted(p) {
            return Ok(());
        }
        if self.corrupted_at.iter().filter(|c| c.is_some()).count() >= self.cfg.t {
            return Err(ScriptError::TooManyCorruptions { t: self.cfg.t });
        }
        self.corrupted_at[p.idx()] = Some(self.step);
        let victims: Vec<u64> = self
            .pending
            .values()
            .filter(|e| e.sender == p && e.receiver != p)
            .map(|e| e.seq)
            .collect();
        for seq in victims {
            let kill = match retract {
                Retraction::None => false,
                Retraction::All => true,
                Retraction::Fraction(f) => self.adv_rng.random_bool(*f),
                Retraction::Kinds(kinds) => {
                    let k = self.pending[&seq].payload.kind();
                    kinds.iter().any(|x| x == k)
                }
            };
            if kill {
                self.pending.swap_remove(&seq);
                self.by_age.remove(&seq);
                self.retracted += 1;
            }
        }
        Ok(())
    }

    fn run_triggers(&mut self) -> Vec<ProcessId> {
        let mut out = Vec::new();
        for i in 0..self.script.triggers.len() {
            if self.fired[i] {
                continue;
            }
            let tag = self.script.triggers[i].tag.clone();
            if !self.coins.is_revealed(&tag) {
                if self.script.peek_early {
                    self.coins.adversary_peek(&tag);
                }
                continue;
            }
            self.fired[i] = true;
            let victim = self.coins.adversary_peek(&tag).expect("revealed").as_process(self.cfg.n);
            if self.is_corrupted(victim) {
                continue;
            }
            let retract = self.script.triggers[i].retract.clone();
            match self.corrupt(victim, &retract) {
                Ok(()) => out.push(victim),
                Err(_) => self.skipped_triggers += 1,
            }
        }
        out
    }
}

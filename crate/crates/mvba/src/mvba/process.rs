use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::{MvbaMsg, Params, ProtocolKind, SymbolRecord};
use crate::agreement::{Mba, MbaOutcome};
use crate::codec::{decode, disperse, payload_len, salted_hash, verify_witness, Digest, RsSymbol, Value};
use crate::coin::CoinTag;
use crate::runtime::{wrap, Automaton, Env, ProcessId};
use crate::smba::Smba;

/// Observable protocol events, consumed by the run harness.
#[derive(Clone, Debug, PartialEq)]
pub enum MvbaEvent {
    /// Sent FINISH because `n - t` DONE messages arrived; lists their senders.
    FinishFromDones { dones: Vec<ProcessId> },
    DisseminationComplete,
    IterationStarted { k: u32, leader: ProcessId },
    /// Candidates after the STORED step.
    Candidates { k: u32, candidates: Vec<Digest> },
    /// Candidates after the SUGGEST step (padded for Reducer).
    Committed { k: u32, committed: Vec<Digest> },
    Adopted { k: u32, x: u32, digest: Digest },
    SmbaDecided { k: u32, x: u32, digest: Digest },
    Reconstructed { k: u32, x: u32, decoded: bool },
    QuasiDecided { k: u32, x: u32, value: Value },
    /// The sub-iteration's MBA gave `⊥` or an invalid value.
    NothingQuasiDecided { k: u32, x: u32 },
    Decided { k: u32, value: Value },
    GaveUp { k: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Step {
    Smba,
    Reconstruct { z: Digest },
    Mba,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Disseminating,
    Stored,
    Suggest,
    Agree { x: u32, step: Step },
    Halted,
}

/// One Reducer or Reducer++ process.
pub struct MvbaProcess {
    p: Arc<Params>,
    instance: Arc<str>,
    me: ProcessId,
    proposal: Value,
    symbols: BTreeMap<ProcessId, SymbolRecord>,
    acks: BTreeSet<ProcessId>,
    done_sent: bool,
    dones: Vec<ProcessId>,
    finish_sent: bool,
    finishes: BTreeSet<ProcessId>,
    completed: bool,
    k: u32,
    leader: ProcessId,
    phase: Phase,
    stored: BTreeMap<u32, Vec<(ProcessId, Option<Digest>)>>,
    suggest: BTreeMap<u32, Vec<(ProcessId, Vec<Digest>)>>,
    reconstruct: BTreeMap<(u32, u32), Vec<(ProcessId, Option<SymbolRecord>)>>,
    candidates: Vec<Digest>,
    first_digest: Option<Digest>,
    smba: BTreeMap<(u32, u32), Smba>,
    smba_out: BTreeMap<(u32, u32), Digest>,
    mba: BTreeMap<(u32, u32), Mba<Value>>,
    mba_out: BTreeMap<(u32, u32), MbaOutcome<Value>>,
    quasi: Vec<Value>,
    decided: Option<Value>,
}

/// The final pick among quasi-decisions for Index coin value `i` (1-based).
pub fn pick_quasi(quasi: &[Value], i: u64) -> &Value {
    &quasi[(i % quasi.len() as u64) as usize]
}

/// Digest a process disseminates for proposal `v`.
pub fn proposal_digest(p: &Params, v: &Value) -> Digest {
    disperse(p.kappa, v, p.degree, p.n).expect("validated parameters").digest
}

impl MvbaProcess {
    pub fn new(p: Arc<Params>, instance: Arc<str>, me: ProcessId, proposal: Value) -> MvbaProcess {
        assert_eq!(proposal.bits(), p.ell, "proposal length must match the scenario");
        MvbaProcess {
            p,
            instance,
            me,
            proposal,
            symbols: BTreeMap::new(),
            acks: BTreeSet::new(),
            done_sent: false,
            dones: Vec::new(),
            finish_sent: false,
            finishes: BTreeSet::new(),
            completed: false,
            k: 0,
            leader: ProcessId(1),
            phase: Phase::Disseminating,
            stored: BTreeMap::new(),
            suggest: BTreeMap::new(),
            reconstruct: BTreeMap::new(),
            candidates: Vec::new(),
            first_digest: None,
            smba: BTreeMap::new(),
            smba_out: BTreeMap::new(),
            mba: BTreeMap::new(),
            mba_out: BTreeMap::new(),
            quasi: Vec::new(),
            decided: None,
        }
    }

    pub fn proposal(&self) -> &Value {
        &self.proposal
    }

    pub fn decision(&self) -> Option<&Value> {
        self.decided.as_ref()
    }

    pub fn iteration(&self) -> u32 {
        self.k
    }

    pub fn dissemination_completed(&self) -> bool {
        self.completed
    }

    pub fn stored_symbol(&self, from: ProcessId) -> Option<&SymbolRecord> {
        self.symbols.get(&from)
    }

    pub fn quasi_decisions(&self) -> &[Value] {
        &self.quasi
    }

    fn in_range(&self, k: u32, x: u32) -> bool {
        k >= 1 && k <= self.p.max_iterations && x >= 1 && x as usize <= self.p.trials
    }

    fn on_init(&mut self, from: ProcessId, rec: SymbolRecord, env: &mut dyn Env<MvbaMsg>) {
        if self.completed || self.symbols.contains_key(&from) {
            return;
        }
        let me = self.me.0 as usize;
        let ok = rec.symbol.index as usize == me
            && rec.symbol.payload.len() == payload_len(self.p.ell, self.p.degree)
            && verify_witness(self.p.kappa, &rec.digest, &rec.witness, me, &rec.symbol);
        if !ok {
            return;
        }
        self.symbols.insert(from, rec);
        env.send(from, MvbaMsg::Ack);
    }

    fn start_iteration(&mut self, k: u32, env: &mut dyn Env<MvbaMsg>, out: &mut Vec<MvbaEvent>) {
        self.k = k;
        self.candidates.clear();
        self.first_digest = None;
        self.leader = env.coin(&CoinTag::election(&self.instance, k)).as_process(self.p.n);
        out.push(MvbaEvent::IterationStarted { k, leader: self.leader });
        let digest = self.symbols.get(&self.leader).map(|r| r.digest);
        env.broadcast(MvbaMsg::Stored { k, digest });
        self.phase = Phase::Stored;
    }

    fn start_sub(&mut self, x: u32, env: &mut dyn Env<MvbaMsg>, out: &mut Vec<MvbaEvent>) {
        let k = self.k;
        match self.p.kind {
            ProtocolKind::Reducer => {
                let c = &self.candidates;
                let adopted = match x {
                    1 | 2 => c[x as usize - 1],
                    _ if self.first_digest == Some(c[0]) => c[1],
                    _ => c[0],
                };
                out.push(MvbaEvent::Adopted { k, x, digest: adopted });
                self.phase = Phase::Agree { x, step: Step::Smba };
                let smba = self.smba.entry((k, x)).or_insert_with(|| {
                    Smba::new(self.p.n, self.p.t, self.p.kappa, &format!("{}/smba/{k}/{x}", self.instance), self.p.default_digest)
                });
                let d = smba
                    .propose(adopted, &mut wrap(env, move |msg| MvbaMsg::Smba { k, x, msg }))
                    .expect("one proposal per sub-iteration");
                if let Some(d) = d {
                    self.smba_out.insert((k, x), d);
                }
            }
            ProtocolKind::ReducerPp => {
                let phi = env.coin(&CoinTag::noise(&self.instance, k, x)).as_noise(self.p.kappa);
                let adopted = self
                    .candidates
                    .iter()
                    .min_by_key(|z| salted_hash(self.p.kappa, z, &phi))
                    .copied()
                    .unwrap_or(self.p.default_digest);
                out.push(MvbaEvent::Adopted { k, x, digest: adopted });
                self.enter_reconstruct(x, adopted, env);
            }
        }
    }

    fn enter_reconstruct(&mut self, x: u32, z: Digest, env: &mut dyn Env<MvbaMsg>) {
        let record = self.symbols.get(&self.leader).cloned();
        env.broadcast(MvbaMsg::Reconstruct { k: self.k, x, record });
        self.phase = Phase::Agree { x, step: Step::Reconstruct { z } };
    }

    /// Decode the leader's value from the RECONSTRUCT symbols that verify against `z`.
    fn reconstruct_value(&self, x: u32, z: &Digest) -> Option<Value> {
        let want = payload_len(self.p.ell, self.p.degree);
        let symbols: Vec<RsSymbol> = self.reconstruct[&(self.k, x)]
            .iter()
            .filter_map(|(from, rec)| {
                let rec = rec.as_ref()?;
                let i = from.0 as usize;
                (rec.symbol.index as usize == i
                    && rec.symbol.payload.len() == want
                    && verify_witness(self.p.kappa, z, &rec.witness, i, &rec.symbol))
                .then(|| rec.symbol.clone())
            })
            .collect();
        if symbols.len() < self.p.degree + 1 {
            return None;
        }
        decode(&symbols, self.p.degree, self.p.ell).ok()
    }

    fn end_iteration(&mut self, env: &mut dyn Env<MvbaMsg>, out: &mut Vec<MvbaEvent>) {
        let k = self.k;
        if !self.quasi.is_empty() && self.decided.is_none() {
            let i = env.coin(&CoinTag::index(&self.instance, k)).in_range(self.p.index_range);
            let v = pick_quasi(&self.quasi, i).clone();
            self.decided = Some(v.clone());
            out.push(MvbaEvent::Decided { k, value: v });
            self.phase = Phase::Halted;
        } else if k >= self.p.max_iterations {
            out.push(MvbaEvent::GaveUp { k });
            self.phase = Phase::Halted;
        } else {
            self.start_iteration(k + 1, env, out);
        }
    }

    fn advance(&mut self, env: &mut dyn Env<MvbaMsg>, out: &mut Vec<MvbaEvent>) {
        let q = self.p.quorum();
        loop {
            let k = self.k;
            match self.phase {
                Phase::Disseminating | Phase::Halted => return,
                Phase::Stored => {
                    let Some(msgs) = self.stored.get(&k).filter(|m| m.len() >= q) else { return };
                    let mut count: BTreeMap<Digest, usize> = BTreeMap::new();
                    for d in msgs[..q].iter().filter_map(|(_, d)| *d) {
                        *count.entry(d).or_default() += 1;
                    }
                    self.candidates = count
                        .into_iter()
                        .filter(|(_, c)| *c >= self.p.candidate_threshold())
                        .map(|(d, _)| d)
                        .collect();
                    out.push(MvbaEvent::Candidates { k, candidates: self.candidates.clone() });
                    env.broadcast(MvbaMsg::Suggest { k, candidates: self.candidates.clone() });
                    self.phase = Phase::Suggest;
                }
                Phase::Suggest => {
                    let Some(msgs) = self.suggest.get(&k).filter(|m| m.len() >= q) else { return };
                    let mut count: BTreeMap<Digest, usize> = BTreeMap::new();
                    for (_, list) in &msgs[..q] {
                        for d in list {
                            *count.entry(*d).or_default() += 1;
                        }
                    }
                    let th = self.p.commit_threshold();
                    self.candidates.retain(|z| count.get(z).copied().unwrap_or(0) >= th);
                    if self.p.kind == ProtocolKind::Reducer {
                        match self.candidates.len() {
                            0 => self.candidates = vec![self.p.default_digest; 2],
                            1 => self.candidates.push(self.candidates[0]),
                            _ => {}
                        }
                        self.candidates.sort();
                    }
                    out.push(MvbaEvent::Committed { k, committed: self.candidates.clone() });
                    self.start_sub(1, env, out);
                }
                Phase::Agree { x, step: Step::Smba } => {
                    let Some(&z) = self.smba_out.get(&(k, x)) else { return };
                    out.push(MvbaEvent::SmbaDecided { k, x, digest: z });
                    if x == 1 {
                        self.first_digest = Some(z);
                    }
                    self.enter_reconstruct(x, z, env);
                }
                Phase::Agree { x, step: Step::Reconstruct { z } } => {
                    if self.reconstruct.get(&(k, x)).is_none_or(|m| m.len() < q) {
                        return;
                    }
                    let decoded = self.reconstruct_value(x, &z);
                    out.push(MvbaEvent::Reconstructed { k, x, decoded: decoded.is_some() });
                    let r = decoded.unwrap_or_else(|| self.proposal.clone());
                    self.phase = Phase::Agree { x, step: Step::Mba };
                    let mba = self.mba.entry((k, x)).or_insert_with(|| {
                        Mba::new(self.p.n, self.p.t, self.p.kappa, Arc::from(format!("{}/mba/{k}/{x}", self.instance)))
                    });
                    let d = mba
                        .propose(r, &mut wrap(env, move |msg| MvbaMsg::Mba { k, x, msg }))
                        .expect("one proposal per sub-iteration");
                    if let Some(d) = d {
                        self.mba_out.insert((k, x), d);
                    }
                }
                Phase::Agree { x, step: Step::Mba } => {
                    let Some(v) = self.mba_out.get(&(k, x)) else { return };
                    match v {
                        MbaOutcome::Value(v) if self.p.validity.valid(v) => {
                            self.quasi.push(v.clone());
                            out.push(MvbaEvent::QuasiDecided { k, x, value: v.clone() });
                        }
                        _ => out.push(MvbaEvent::NothingQuasiDecided { k, x }),
                    }
                    if (x as usize) < self.p.trials {
                        self.start_sub(x + 1, env, out);
                    } else {
                        self.end_iteration(env, out);
                    }
                }
            }
        }
    }

    fn sanitize(&self, mut list: Vec<Digest>) -> Vec<Digest> {
        list.sort();
        list.dedup();
        list.truncate(self.p.candidate_cap);
        list
    }
}

fn first_per_sender<T>(v: &mut Vec<(ProcessId, T)>, from: ProcessId, item: T) {
    if !v.iter().any(|(p, _)| *p == from) {
        v.push((from, item));
    }
}

impl Automaton for MvbaProcess {
    type Msg = MvbaMsg;
    type Out = MvbaEvent;

    fn start(&mut self, env: &mut dyn Env<MvbaMsg>, _out: &mut Vec<MvbaEvent>) {
        let enc = disperse(self.p.kappa, &self.proposal, self.p.degree, self.p.n).expect("validated parameters");
        for (j, (symbol, witness)) in enc.symbols.into_iter().zip(enc.witnesses).enumerate() {
            env.send(ProcessId::from_idx(j), MvbaMsg::Init(SymbolRecord { symbol, digest: enc.digest, witness }));
        }
    }

    fn handle(&mut self, from: ProcessId, msg: MvbaMsg, env: &mut dyn Env<MvbaMsg>, out: &mut Vec<MvbaEvent>) {
        let (n, t) = (self.p.n, self.p.t);
        match msg {
            MvbaMsg::Init(rec) => self.on_init(from, rec, env),
            MvbaMsg::Ack => {
                self.acks.insert(from);
                if self.acks.len() >= n - t && !self.done_sent {
                    self.done_sent = true;
                    env.broadcast(MvbaMsg::Done);
                }
            }
            MvbaMsg::Done => {
                if !self.dones.contains(&from) {
                    self.dones.push(from);
                }
                if self.dones.len() >= n - t && !self.finish_sent {
                    self.finish_sent = true;
                    env.broadcast(MvbaMsg::Finish);
                    out.push(MvbaEvent::FinishFromDones { dones: self.dones.clone() });
                }
            }
            MvbaMsg::Finish => {
                self.finishes.insert(from);
                if self.finishes.len() > t && !self.finish_sent {
                    self.finish_sent = true;
                    env.broadcast(MvbaMsg::Finish);
                }
                if self.finishes.len() >= n - t && !self.completed {
                    self.completed = true;
                    out.push(MvbaEvent::DisseminationComplete);
                    self.start_iteration(1, env, out);
                }
            }
            MvbaMsg::Stored { k, digest } => {
                if self.in_range(k, 1) {
                    first_per_sender(self.stored.entry(k).or_default(), from, digest);
                }
            }
            MvbaMsg::Suggest { k, candidates } => {
                if self.in_range(k, 1) {
                    let list = self.sanitize(candidates);
                    first_per_sender(self.suggest.entry(k).or_default(), from, list);
                }
            }
            MvbaMsg::Reconstruct { k, x, record } => {
                if self.in_range(k, x) {
                    first_per_sender(self.reconstruct.entry((k, x)).or_default(), from, record);
                }
            }
            MvbaMsg::Smba { k, x, msg } => {
                if self.p.kind != ProtocolKind::Reducer || !self.in_range(k, x) {
                    return;
                }
                let (p, inst) = (&self.p, &self.instance);
                let smba = self
                    .smba
                    .entry((k, x))
                    .or_insert_with(|| Smba::new(p.n, p.t, p.kappa, &format!("{inst}/smba/{k}/{x}"), p.default_digest));
                if let Some(d) = smba.handle(from, msg, &mut wrap(env, move |msg| MvbaMsg::Smba { k, x, msg })) {
                    self.smba_out.insert((k, x), d);
                }
            }
            MvbaMsg::Mba { k, x, msg } => {
                if !self.in_range(k, x) {
                    return;
                }
                let (p, inst) = (&self.p, &self.instance);
                let mba = self
                    .mba
                    .entry((k, x))
                    .or_insert_with(|| Mba::new(p.n, p.t, p.kappa, Arc::from(format!("{inst}/mba/{k}/{x}"))));
                if let Some(d) = mba.handle(from, msg, &mut wrap(env, move |msg| MvbaMsg::Mba { k, x, msg })) {
                    self.mba_out.insert((k, x), d);
                }
            }
        }
        self.advance(env, out);
    }
}

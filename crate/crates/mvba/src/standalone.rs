//! Runs a single sub-protocol instance per process inside the simulator.
//!
//! Used by the sub-protocol test suites and benchmarks. Every process gets
//! an input, proposes it at start, and the run continues until the network
//! is quiescent or the step budget is spent.

use std::fmt::Debug;
use std::sync::Arc;

use crate::agreement::{Ba, BaMsg, Gc, GcMsg, Mba, MbaMsg, MbaOutcome, Payload};
use crate::codec::{Digest, Kappa};
use crate::coin::CoinOracle;
use crate::crb::{Crb, CrbMsg, Slot};
use crate::runtime::{AdversaryScript, Automaton, Env, ProcessId, ScriptError, SimConfig, Simulation, WireMessage};
use crate::smba::{Smba, SmbaMsg};
use crate::wire::WireParams;

/// A protocol instance that can be driven on its own.
pub trait Instance {
    type Msg: WireMessage;
    type Input: Clone + Debug;
    type Output: Clone + Debug;

    fn propose(&mut self, input: Self::Input, env: &mut dyn Env<Self::Msg>) -> Vec<Self::Output>;
    fn handle(&mut self, from: ProcessId, msg: Self::Msg, env: &mut dyn Env<Self::Msg>) -> Vec<Self::Output>;
}

impl<V: Payload> Instance for Gc<V> {
    type Msg = GcMsg<V>;
    type Input = V;
    type Output = (V, bool);

    fn propose(&mut self, input: V, env: &mut dyn Env<GcMsg<V>>) -> Vec<(V, bool)> {
        Gc::propose(self, input, env).expect("single proposal").into_iter().collect()
    }
    fn handle(&mut self, from: ProcessId, msg: GcMsg<V>, env: &mut dyn Env<GcMsg<V>>) -> Vec<(V, bool)> {
        Gc::handle(self, from, msg, env).into_iter().collect()
    }
}

impl Instance for Ba {
    type Msg = BaMsg;
    type Input = bool;
    type Output = bool;

    fn propose(&mut self, input: bool, env: &mut dyn Env<BaMsg>) -> Vec<bool> {
        Ba::propose(self, input, env).expect("single proposal").into_iter().collect()
    }
    fn handle(&mut self, from: ProcessId, msg: BaMsg, env: &mut dyn Env<BaMsg>) -> Vec<bool> {
        Ba::handle(self, from, msg, env).into_iter().collect()
    }
}

impl<V: Payload> Instance for Mba<V> {
    type Msg = MbaMsg<V>;
    type Input = V;
    type Output = MbaOutcome<V>;

    fn propose(&mut self, input: V, env: &mut dyn Env<MbaMsg<V>>) -> Vec<MbaOutcome<V>> {
        Mba::propose(self, input, env).expect("single proposal").into_iter().collect()
    }
    fn handle(&mut self, from: ProcessId, msg: MbaMsg<V>, env: &mut dyn Env<MbaMsg<V>>) -> Vec<MbaOutcome<V>> {
        Mba::handle(self, from, msg, env).into_iter().collect()
    }
}

impl Instance for Crb {
    type Msg = CrbMsg;
    type Input = Digest;
    type Output = Slot;

    fn propose(&mut self, input: Digest, env: &mut dyn Env<CrbMsg>) -> Vec<Slot> {
        self.broadcast(input, env).expect("single broadcast")
    }
    fn handle(&mut self, from: ProcessId, msg: CrbMsg, env: &mut dyn Env<CrbMsg>) -> Vec<Slot> {
        Crb::handle(self, from, msg, env)
    }
}

impl Instance for Smba {
    type Msg = SmbaMsg;
    type Input = Digest;
    type Output = Digest;

    fn propose(&mut self, input: Digest, env: &mut dyn Env<SmbaMsg>) -> Vec<Digest> {
        Smba::propose(self, input, env).expect("single proposal").into_iter().collect()
    }
    fn handle(&mut self, from: ProcessId, msg: SmbaMsg, env: &mut dyn Env<SmbaMsg>) -> Vec<Digest> {
        Smba::handle(self, from, msg, env).into_iter().collect()
    }
}

pub struct Node<I: Instance> {
    pub inst: I,
    input: I::Input,
}

impl<I: Instance> Automaton for Node<I> {
    type Msg = I::Msg;
    type Out = I::Output;

    fn start(&mut self, env: &mut dyn Env<I::Msg>, out: &mut Vec<I::Output>) {
        out.extend(self.inst.propose(self.input.clone(), env));
    }

    fn handle(&mut self, from: ProcessId, msg: I::Msg, env: &mut dyn Env<I::Msg>, out: &mut Vec<I::Output>) {
        out.extend(self.inst.handle(from, msg, env));
    }
}

/// One output of one process, with the causal depth it was produced at.
#[derive(Clone, Debug)]
pub struct Emitted<O> {
    pub value: O,
    pub depth: u64,
    pub step: u64,
}

#[derive(Debug)]
pub struct StandaloneRun<I: Instance> {
    pub outputs: Vec<Vec<Emitted<I::Output>>>,
    pub corrupted: Vec<ProcessId>,
    pub steps: u64,
    pub messages: u64,
    pub bits: u64,
    pub quiescent: bool,
    pub early_peeks: usize,
    pub nodes: Vec<I>,
}

impl<I: Instance> StandaloneRun<I> {
    pub fn is_correct(&self, p: ProcessId) -> bool {
        !self.corrupted.contains(&p)
    }

    /// First output of every correct process, `None` where there was none.
    pub fn first_outputs(&self) -> Vec<(ProcessId, Option<&I::Output>)> {
        ProcessId::all(self.outputs.len())
            .filter(|&p| self.is_correct(p))
            .map(|p| (p, self.outputs[p.idx()].first().map(|e| &e.value)))
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct StandaloneConfig {
    pub n: usize,
    pub t: usize,
    pub kappa: Kappa,
    pub seed: u64,
    pub max_steps: u64,
}

impl StandaloneConfig {
    pub fn new(n: usize, t: usize, seed: u64) -> StandaloneConfig {
        StandaloneConfig { n, t, kappa: Kappa::DEFAULT, seed, max_steps: 2_000_000 }
    }
}

pub fn run<I: Instance>(
    cfg: &StandaloneConfig,
    inputs: Vec<I::Input>,
    make: impl Fn(ProcessId) -> I,
    script: AdversaryScript,
) -> Result<StandaloneRun<I>, ScriptError> {
    assert_eq!(inputs.len(), cfg.n, "one input per process");
    let procs: Vec<Node<I>> = inputs
        .into_iter()
        .enumerate()
        .map(|(i, input)| Node { inst: make(ProcessId::from_idx(i)), input })
        .collect();
    let sim_cfg = SimConfig { n: cfg.n, t: cfg.t, seed: cfg.seed, wire: WireParams { kappa: cfg.kappa } };
    let coins = CoinOracle::new(cfg.seed, cfg.t);
    let mut sim = Simulation::new(sim_cfg, procs, script, coins)?;
    let mut outputs: Vec<Vec<Emitted<I::Output>>> = vec![Vec::new(); cfg.n];
    for (p, outs) in sim.start() {
        let depth = sim.depth_of(p);
        outputs[p.idx()].extend(outs.into_iter().map(|value| Emitted { value, depth, step: 0 }));
    }
    let mut quiescent = false;
    while sim.steps() < cfg.max_steps {
        let Some(rep) = sim.step() else {
            quiescent = true;
            break;
        };
        for value in rep.outputs {
            outputs[rep.receiver.idx()].push(Emitted { value, depth: rep.depth, step: rep.step });
        }
    }
    let early_peeks = sim.coins().early_peeks().len();
    let corrupted = sim.corrupted();
    let (steps, messages, bits) = (sim.steps(), sim.total_messages(), sim.total_bits());
    Ok(StandaloneRun {
        outputs,
        corrupted,
        steps,
        messages,
        bits,
        quiescent,
        early_peeks,
        nodes: sim.into_processes().into_iter().map(|n| n.inst).collect(),
    })
}

/// Constructors for the usual instances.
pub fn gc<V: Payload>(cfg: &StandaloneConfig) -> impl Fn(ProcessId) -> Gc<V> + '_ {
    move |_| Gc::new(cfg.n, cfg.t, cfg.kappa)
}

pub fn ba(cfg: &StandaloneConfig) -> impl Fn(ProcessId) -> Ba + '_ {
    move |_| Ba::new(cfg.n, cfg.t, Arc::from("ba"))
}

pub fn mba<V: Payload>(cfg: &StandaloneConfig) -> impl Fn(ProcessId) -> Mba<V> + '_ {
    move |_| Mba::new(cfg.n, cfg.t, cfg.kappa, Arc::from("mba"))
}

pub fn crb(cfg: &StandaloneConfig) -> impl Fn(ProcessId) -> Crb + '_ {
    move |_| Crb::new(cfg.n, cfg.t)
}

pub fn smba(cfg: &StandaloneConfig, default: Digest) -> impl Fn(ProcessId) -> Smba + '_ {
    move |_| Smba::new(cfg.n, cfg.t, cfg.kappa, "smba", default)
}

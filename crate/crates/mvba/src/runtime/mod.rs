//! Deterministic discrete-event simulator.
//!
//! Processes are pure automata: each delivery is fed to exactly one
//! automaton, whose sends are turned into envelopes and queued. The
//! [`Simulation`] owns the network, the scheduler, the coin oracle and the
//! adversary. Everything is driven from one thread, and all randomness comes
//! from the run seed, so a `(scenario, seed)` pair fixes the whole trace.

mod adversary;
mod metrics;
mod sched;
mod sim;

use std::fmt::{self, Debug};

use serde::{Deserialize, Serialize};

use crate::codec::Digest;
use crate::coin::{CoinTag, CoinValue};
use crate::wire::{Encode, WireParams};

pub use adversary::{AdversaryScript, Behavior, Retraction, ScriptError, Trigger};
pub use metrics::{percentile, Observations, RunMetrics, Violations};
pub use sched::{PriorityRule, SchedulePolicy};
pub use sim::{Envelope, SimConfig, Simulation, StepReport};

/// A process ordinal in `[1, n]`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProcessId(pub u16);

impl ProcessId {
    pub fn idx(self) -> usize {
        self.0 as usize - 1
    }

    pub fn from_idx(i: usize) -> ProcessId {
        ProcessId(i as u16 + 1)
    }

    pub fn all(n: usize) -> impl Iterator<Item = ProcessId> {
        (1..=n as u16).map(ProcessId)
    }
}

impl Debug for ProcessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

impl fmt::Display for ProcessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

/// What an automaton sees of the world while handling one event.
pub trait Env<M> {
    fn me(&self) -> ProcessId;
    fn n(&self) -> usize;
    fn t(&self) -> usize;
    fn send(&mut self, to: ProcessId, msg: M);
    /// Send to every process, including the caller.
    fn broadcast(&mut self, msg: M);
    fn coin(&mut self, tag: &CoinTag) -> CoinValue;
}

/// Adapts an environment for a nested sub-protocol by wrapping its messages.
pub struct Wrap<'a, P, F> {
    inner: &'a mut dyn Env<P>,
    f: F,
}

pub fn wrap<'a, P, C, F: Fn(C) -> P>(inner: &'a mut dyn Env<P>, f: F) -> Wrap<'a, P, F> {
    Wrap { inner, f }
}

impl<P, C, F: Fn(C) -> P> Env<C> for Wrap<'_, P, F> {
    fn me(&self) -> ProcessId {
        self.inner.me()
    }
    fn n(&self) -> usize {
        self.inner.n()
    }
    fn t(&self) -> usize {
        self.inner.t()
    }
    fn send(&mut self, to: ProcessId, msg: C) {
        let m = (self.f)(msg);
        self.inner.send(to, m)
    }
    fn broadcast(&mut self, msg: C) {
        let m = (self.f)(msg);
        self.inner.broadcast(m)
    }
    fn coin(&mut self, tag: &CoinTag) -> CoinValue {
        self.inner.coin(tag)
    }
}

/// A top-level message type the simulator can carry and the adversary can
/// manipulate.
pub trait WireMessage: Clone + Debug + Encode {
    /// Innermost message kind, used by scheduling rules and Byzantine filters.
    fn kind(&self) -> &'static str;

    /// Visit every digest carried by the message.
    fn visit_digests(&mut self, _f: &mut dyn FnMut(&mut Digest)) {}

    /// Corrupt one field in place. Returns false if nothing could be changed.
    fn tamper(&mut self, _salt: u64, _p: &WireParams) -> bool {
        false
    }
}

/// A deterministic process state machine.
pub trait Automaton {
    type Msg: WireMessage;
    type Out: Clone + Debug;

    fn start(&mut self, env: &mut dyn Env<Self::Msg>, out: &mut Vec<Self::Out>);

    fn handle(
        &mut self,
        from: ProcessId,
        msg: Self::Msg,
        env: &mut dyn Env<Self::Msg>,
        out: &mut Vec<Self::Out>,
    );
}

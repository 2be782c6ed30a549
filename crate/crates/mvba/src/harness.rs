//! Drives one MVBA run to decision and checks it against ground truth.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{Digest, Value};
use crate::coin::{CoinOracle, CoinTag, CoinValue};
use crate::mvba::{proposal_digest, value_id, MvbaEvent, MvbaProcess, Params, ProtocolKind};
use crate::runtime::{AdversaryScript, Observations, ProcessId, RunMetrics, ScriptError, SimConfig, Simulation, Violations};
use crate::wire::WireParams;

/// How proposals are drawn for a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProposalMode {
    /// Every process samples its own valid value.
    #[default]
    Distinct,
    /// All processes propose one valid value.
    Unanimous,
}

pub fn proposals(p: &Params, seed: u64, mode: ProposalMode) -> Vec<Value> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e0b_05a1_0000_0003);
    match mode {
        ProposalMode::Distinct => (0..p.n).map(|_| p.validity.sample(&mut rng, p.ell)).collect(),
        ProposalMode::Unanimous => vec![p.validity.sample(&mut rng, p.ell); p.n],
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Script(#[from] ScriptError),
    #[error("correct process {0} proposes a value that fails the validity predicate")]
    InvalidProposal(ProcessId),
}

#[derive(Clone, Debug)]
pub struct RunSpec {
    pub scenario: String,
    pub params: Arc<Params>,
    pub seed: u64,
    pub script: AdversaryScript,
    pub proposals: Vec<Value>,
    /// Coins fixed in advance (scripted leaders).
    pub forced_coins: Vec<(CoinTag, CoinValue)>,
    pub max_steps: u64,
    /// Keep every protocol event in [`Traced::events`].
    pub trace: bool,
}

/// A run's metrics plus, if requested, its protocol event trace.
#[derive(Clone, Debug)]
pub struct Traced {
    pub metrics: RunMetrics,
    pub events: Vec<(u64, ProcessId, MvbaEvent)>,
}

impl RunSpec {
    pub fn new(scenario: &str, params: Arc<Params>, seed: u64, script: AdversaryScript) -> RunSpec {
        let proposals = proposals(&params, seed, ProposalMode::Distinct);
        RunSpec {
            scenario: scenario.to_string(),
            params,
            seed,
            script,
            proposals,
            forced_coins: Vec::new(),
            max_steps: 50_000_000,
            trace: false,
        }
    }
}

/// Per-iteration facts collected while the run progresses.
#[derive(Default)]
struct IterationLog {
    leader: Option<ProcessId>,
    /// Committed lists of processes that were correct when they committed.
    committed: BTreeMap<ProcessId, Vec<Digest>>,
    quasi: BTreeMap<ProcessId, Vec<Value>>,
}

struct Tracker<'a> {
    p: &'a Params,
    proposals: &'a [Value],
    d_first: Option<BTreeSet<ProcessId>>,
    iterations: BTreeMap<u32, IterationLog>,
    decisions: Vec<Vec<(u32, Value, u64, u64)>>,
    max_candidates: usize,
    quasi_count: usize,
}

impl Tracker<'_> {
    fn record(&mut self, p: ProcessId, ev: MvbaEvent, depth: u64, step: u64, corrupted: &dyn Fn(ProcessId) -> bool) {
        let correct = !corrupted(p);
        match ev {
            MvbaEvent::FinishFromDones { dones } => {
                if correct && self.d_first.is_none() {
                    self.d_first = Some(dones.into_iter().filter(|q| !corrupted(*q)).collect());
                }
            }
            MvbaEvent::IterationStarted { k, leader } => {
                self.iterations.entry(k).or_default().leader = Some(leader);
            }
            MvbaEvent::Candidates { candidates, .. } if correct => {
                self.max_candidates = self.max_candidates.max(candidates.len());
            }
            MvbaEvent::Committed { k, committed } if correct => {
                self.iterations.entry(k).or_default().committed.insert(p, committed);
            }
            MvbaEvent::QuasiDecided { k, value, .. } => {
                if correct {
                    self.quasi_count += 1;
                }
                self.iterations.entry(k).or_default().quasi.entry(p).or_default().push(value);
            }
            MvbaEvent::Decided { k, value } => self.decisions[p.idx()].push((k, value, depth, step)),
            _ => {}
        }
    }

    fn good(&self, k: u32) -> bool {
        match (&self.d_first, self.iterations.get(&k).and_then(|l| l.leader)) {
            (Some(d), Some(l)) => d.contains(&l),
            _ => false,
        }
    }
}

/// Union of the `c`-th committed digests (0-based) over correct processes.
fn committed_at(log: &IterationLog, c: usize) -> BTreeSet<Digest> {
    log.committed.values().filter_map(|l| l.get(c).copied()).collect()
}

pub fn run(spec: &RunSpec) -> Result<RunMetrics, RunError> {
    Ok(run_traced(spec)?.metrics)
}

pub fn run_traced(spec: &RunSpec) -> Result<Traced, RunError> {
    let p = &*spec.params;
    assert_eq!(spec.proposals.len(), p.n, "one proposal per process");
    for (i, v) in spec.proposals.iter().enumerate() {
        let q = ProcessId::from_idx(i);
        if !spec.script.static_corrupt.contains(&q) && !p.validity.valid(v) {
            return Err(RunError::InvalidProposal(q));
        }
    }
    let mut events = Vec::new();
    let instance: Arc<str> = Arc::from(spec.scenario.as_str());
    let procs: Vec<MvbaProcess> = spec
        .proposals
        .iter()
        .enumerate()
        .map(|(i, v)| MvbaProcess::new(spec.params.clone(), instance.clone(), ProcessId::from_idx(i), v.clone()))
        .collect();
    let wire = WireParams { kappa: p.kappa };
    let mut coins = CoinOracle::new(spec.seed, p.t);
    for (tag, v) in &spec.forced_coins {
        coins.force(tag.clone(), *v);
    }
    let cfg = SimConfig { n: p.n, t: p.t, seed: spec.seed, wire };
    let mut sim = Simulation::new(cfg, procs, spec.script.clone(), coins)?;

    let mut tr = Tracker {
        p,
        proposals: &spec.proposals,
        d_first: None,
        iterations: BTreeMap::new(),
        decisions: vec![Vec::new(); p.n],
        max_candidates: 0,
        quasi_count: 0,
    };
    let mut gave_up = vec![false; p.n];
    for (q, outs) in sim.start() {
        for ev in outs {
            if spec.trace {
                events.push((0, q, ev.clone()));
            }
            let corrupted = |x: ProcessId| sim.is_corrupted(x);
            tr.record(q, ev, 0, 0, &corrupted);
        }
    }
    let finished = |sim: &Simulation<MvbaProcess>, gave_up: &[bool], tr: &Tracker| {
        ProcessId::all(p.n).all(|q| sim.is_corrupted(q) || !tr.decisions[q.idx()].is_empty() || gave_up[q.idx()])
    };
    while !finished(&sim, &gave_up, &tr) && sim.steps() < spec.max_steps {
        let Some(rep) = sim.step() else { break };
        for ev in rep.outputs {
            if spec.trace {
                events.push((rep.step, rep.receiver, ev.clone()));
            }
            if matches!(ev, MvbaEvent::GaveUp { .. }) {
                gave_up[rep.receiver.idx()] = true;
            }
            let corrupted = |x: ProcessId| sim.is_corrupted(x);
            tr.record(rep.receiver, ev, rep.depth, rep.step, &corrupted);
        }
    }

    // A decision counts as correct if the process was uncorrupted when it decided.
    let correct_at = |q: ProcessId, step: u64| sim.corrupted_at(q).is_none_or(|c| c >= step);
    let mut v = Violations::default();
    let mut decided: Vec<Option<String>> = vec![None; p.n];
    let mut depth: Vec<Option<u64>> = vec![None; p.n];
    let mut correct_decisions: Vec<(u32, &Value)> = Vec::new();
    for q in ProcessId::all(p.n) {
        let ds = &tr.decisions[q.idx()];
        let Some((k, val, d, step)) = ds.first() else { continue };
        if !correct_at(q, *step) {
            continue;
        }
        if ds.len() > 1 {
            v.integrity = true;
        }
        if !p.validity.valid(val) {
            v.external_validity = true;
        }
        decided[q.idx()] = Some(value_id(val, &wire));
        depth[q.idx()] = Some(*d);
        correct_decisions.push((*k, val));
    }
    if correct_decisions.windows(2).any(|w| w[0].1 != w[1].1) {
        v.agreement = true;
    }
    if sim.coins().early_peeks().len() > 0 {
        v.model = true;
    }

    let all_decided = ProcessId::all(p.n).all(|q| sim.is_corrupted(q) || decided[q.idx()].is_some());
    let obs = observe(&tr, &sim, correct_decisions.first().map(|(_, v)| *v));
    let metrics = RunMetrics {
        scenario: spec.scenario.clone(),
        protocol: p.kind.name().to_string(),
        seed: spec.seed,
        n: p.n,
        t: p.t,
        ell: p.ell,
        kappa: p.kappa.bits(),
        total_messages: sim.total_messages(),
        total_bits: sim.total_bits(),
        steps: sim.steps(),
        decision_depth: depth,
        iterations_to_decide: correct_decisions.iter().map(|(k, _)| *k).max(),
        decided,
        all_decided,
        timed_out: !all_decided,
        corrupted: sim.corrupted().iter().map(|q| q.0).collect(),
        retracted: sim.retracted(),
        violations: v,
        observations: obs,
    };
    Ok(Traced { metrics, events })
}

fn observe(tr: &Tracker, sim: &Simulation<MvbaProcess>, decision: Option<&Value>) -> Observations {
    let p = tr.p;
    let good: Vec<u32> = tr.iterations.keys().copied().filter(|&k| tr.good(k)).collect();
    let mut max_committed = 0;
    let mut commit_ok = true;
    for &k in &good {
        let log = &tr.iterations[&k];
        let all: BTreeSet<Digest> = log.committed.values().flatten().copied().collect();
        max_committed = max_committed.max(all.len());
        if p.kind == ProtocolKind::Reducer && !log.committed.is_empty() {
            let leader = log.leader.expect("good iterations have a leader");
            let z = proposal_digest(p, &tr.proposals[leader.idx()]);
            let (c1, c2) = (committed_at(log, 0), committed_at(log, 1));
            let held = (c1.contains(&z) && c1.len() <= 2) || (c2.len() == 1 && c2.contains(&z));
            commit_ok &= held;
        }
    }
    let first_good = good.first().copied();
    let good_quasi = first_good.map(|k| {
        let log = &tr.iterations[&k];
        let v_star = &tr.proposals[log.leader.unwrap().idx()];
        ProcessId::all(p.n)
            .filter(|q| !sim.is_corrupted(*q))
            .all(|q| log.quasi.get(&q).is_some_and(|vs| vs.contains(v_star)))
    });
    let static_bad: Vec<&Value> = sim
        .corrupted()
        .into_iter()
        .filter(|q| sim.corrupted_at(*q) == Some(0))
        .map(|q| &tr.proposals[q.idx()])
        .collect();
    Observations {
        good_iterations: good,
        first_good_iteration: first_good,
        good_iteration_quasi_decided: good_quasi,
        max_candidates_per_process: tr.max_candidates,
        max_committed_in_good_iteration: max_committed,
        commit_condition_held: commit_ok,
        d_first_size: tr.d_first.as_ref().map(|d| d.len()),
        adversarial_decision: decision.map(|d| static_bad.contains(&d)),
        quasi_decisions: tr.quasi_count,
    }
}

use std::sync::Arc;

use mvba::codec::{disperse, salted_hash};
use mvba::coin::{CoinOracle, CoinTag, CoinValue};
use mvba::harness::{self, RunError, RunSpec};
use mvba::mvba::{pick_quasi, Epsilon, MvbaEvent, MvbaMsg, MvbaProcess, Params, SymbolRecord, Validity};
use mvba::runtime::{AdversaryScript, Automaton, Behavior, Env, ProcessId};
use mvba::{Kappa, Value};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn reducer(t: usize) -> Arc<Params> {
    Arc::new(Params::reducer(t, 256, Kappa::DEFAULT, Validity::AlwaysTrue).unwrap())
}

fn reducer_pp(t: usize) -> Arc<Params> {
    Arc::new(Params::reducer_pp(t, Epsilon::ONE, 256, Kappa::DEFAULT, Validity::AlwaysTrue).unwrap())
}

/// Records what one automaton sends when driven by hand.
struct Probe {
    me: ProcessId,
    n: usize,
    t: usize,
    sent: Vec<(Option<ProcessId>, MvbaMsg)>,
    coins: CoinOracle,
}

impl Probe {
    fn new(me: u16, n: usize, t: usize) -> Probe {
        Probe { me: ProcessId(me), n, t, sent: Vec::new(), coins: CoinOracle::new(0, t) }
    }
    fn kinds(&self) -> Vec<&'static str> {
        use mvba::runtime::WireMessage;
        self.sent.iter().map(|(_, m)| m.kind()).collect()
    }
}

impl Env<MvbaMsg> for Probe {
    fn me(&self) -> ProcessId {
        self.me
    }
    fn n(&self) -> usize {
        self.n
    }
    fn t(&self) -> usize {
        self.t
    }
    fn send(&mut self, to: ProcessId, msg: MvbaMsg) {
        self.sent.push((Some(to), msg));
    }
    fn broadcast(&mut self, msg: MvbaMsg) {
        self.sent.push((None, msg));
    }
    fn coin(&mut self, tag: &CoinTag) -> CoinValue {
        self.coins.query(tag, self.me)
    }
}

fn value(b: u8) -> Value {
    Value::new(vec![b; 32], 256).unwrap()
}

#[test]
fn fault_free_runs_decide_with_clean_flags() {
    for p in [reducer(1), reducer(2), reducer_pp(1), reducer_pp(2)] {
        for seed in 0..10 {
            let m = harness::run(&RunSpec::new("e2e", p.clone(), seed, AdversaryScript::fault_free())).unwrap();
            assert!(m.all_decided && !m.timed_out, "{} seed={seed}", m.protocol);
            assert!(!m.violations.any(), "{} seed={seed}: {:?}", m.protocol, m.violations);
            assert_eq!(m.observations.d_first_size, Some(p.n - p.t));
        }
    }
}

#[test]
fn fault_free_dissemination_completes_everywhere() {
    let p = reducer(1);
    let spec = RunSpec { trace: true, ..RunSpec::new("dissem", p.clone(), 3, AdversaryScript::fault_free()) };
    let tr = harness::run_traced(&spec).unwrap();
    for q in ProcessId::all(p.n) {
        assert!(
            tr.events.iter().any(|(_, who, e)| *who == q && *e == MvbaEvent::DisseminationComplete),
            "{q} never completed dissemination"
        );
    }
}

#[test]
fn invalid_witness_is_ignored_without_ack() {
    let p = reducer(1);
    let enc = disperse(p.kappa, &value(7), p.degree, p.n).unwrap();
    let mut proc = MvbaProcess::new(p.clone(), Arc::from("w"), ProcessId(1), value(1));
    let mut env = Probe::new(1, p.n, p.t);
    let mut out = Vec::new();
    // Right symbol, witness issued for another position.
    let bad = SymbolRecord { symbol: enc.symbols[0].clone(), digest: enc.digest, witness: enc.witnesses[1].clone() };
    proc.handle(ProcessId(2), MvbaMsg::Init(bad), &mut env, &mut out);
    // Symbol meant for someone else.
    let other = SymbolRecord { symbol: enc.symbols[2].clone(), digest: enc.digest, witness: enc.witnesses[2].clone() };
    proc.handle(ProcessId(2), MvbaMsg::Init(other), &mut env, &mut out);
    assert!(env.sent.is_empty(), "sent {:?}", env.kinds());
    assert!(proc.stored_symbol(ProcessId(2)).is_none());
    let good = SymbolRecord { symbol: enc.symbols[0].clone(), digest: enc.digest, witness: enc.witnesses[0].clone() };
    proc.handle(ProcessId(2), MvbaMsg::Init(good.clone()), &mut env, &mut out);
    assert_eq!(env.kinds(), vec!["ack"]);
    proc.handle(ProcessId(2), MvbaMsg::Init(good), &mut env, &mut out);
    assert_eq!(env.kinds(), vec!["ack"], "a second INIT from the same sender must not be acknowledged");
}

#[test]
fn t_plus_one_finish_amplifies() {
    let p = reducer(1);
    let mut proc = MvbaProcess::new(p.clone(), Arc::from("f"), ProcessId(1), value(1));
    let mut env = Probe::new(1, p.n, p.t);
    let mut out = Vec::new();
    proc.handle(ProcessId(2), MvbaMsg::Finish, &mut env, &mut out);
    assert!(env.sent.is_empty());
    proc.handle(ProcessId(3), MvbaMsg::Finish, &mut env, &mut out);
    assert_eq!(env.kinds(), vec!["finish"]);
    assert!(!proc.dissemination_completed());
    proc.handle(ProcessId(4), MvbaMsg::Finish, &mut env, &mut out);
    proc.handle(ProcessId(5), MvbaMsg::Finish, &mut env, &mut out);
    assert!(proc.dissemination_completed());
    assert!(out.contains(&MvbaEvent::DisseminationComplete));
    assert_eq!(env.kinds().iter().filter(|k| **k == "finish").count(), 1);
}

#[test]
fn quasi_pick_arithmetic() {
    let (va, vb) = (value(1), value(2));
    let q = vec![va.clone(), vb.clone()];
    assert_eq!(pick_quasi(&q, 3), &vb);
    assert_eq!(pick_quasi(&q, 2), &va);
    assert_eq!(pick_quasi(&[va.clone()], 3), &va);
}

#[test]
fn crashed_leader_iteration_is_not_good_and_forces_nothing() {
    let p = reducer(1);
    for seed in 0..20 {
        let script = AdversaryScript {
            static_corrupt: vec![ProcessId(5)],
            behaviors: vec![Behavior::Crash],
            ..Default::default()
        };
        let mut spec = RunSpec::new("crashed-leader", p.clone(), seed, script);
        spec.forced_coins = vec![(CoinTag::election(&Arc::from("crashed-leader"), 1), CoinValue::forcing(5))];
        let m = harness::run(&spec).unwrap();
        assert!(!m.observations.good_iterations.contains(&1), "seed={seed}");
        assert!(m.iterations_to_decide.unwrap() >= 2, "seed={seed}: decided in iteration 1");
        assert!(!m.violations.any());
    }
}

#[test]
fn invalid_leader_value_is_never_quasi_decided() {
    let validity = Validity::ChecksumSuffix;
    let p = Arc::new(Params::reducer(1, 256, Kappa::DEFAULT, validity.clone()).unwrap());
    for seed in 0..20 {
        let script = AdversaryScript { static_corrupt: vec![ProcessId(5)], ..Default::default() };
        let mut spec = RunSpec::new("invalid-leader", p.clone(), seed, script);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        spec.proposals[4] = validity.sample_invalid(&mut rng, 256).unwrap();
        spec.forced_coins = vec![(CoinTag::election(&Arc::from("invalid-leader"), 1), CoinValue::forcing(5))];
        spec.trace = true;
        let tr = harness::run_traced(&spec).unwrap();
        assert!(!tr.metrics.violations.any(), "seed={seed}: {:?}", tr.metrics.violations);
        assert!(tr.metrics.all_decided);
        for (_, _, e) in &tr.events {
            if let MvbaEvent::QuasiDecided { value, .. } = e {
                assert!(validity.valid(value), "seed={seed}: invalid value quasi-decided");
            }
        }
    }
}

#[test]
fn correct_process_with_invalid_proposal_is_rejected() {
    let validity = Validity::ChecksumSuffix;
    let p = Arc::new(Params::reducer(1, 256, Kappa::DEFAULT, validity.clone()).unwrap());
    let mut spec = RunSpec::new("bad-config", p, 0, AdversaryScript::fault_free());
    spec.proposals[0] = validity.sample_invalid(&mut ChaCha8Rng::seed_from_u64(1), 256).unwrap();
    assert!(matches!(harness::run(&spec), Err(RunError::InvalidProposal(ProcessId(1)))));
}

#[test]
fn reducer_pp_adopts_the_smallest_salted_hash() {
    let p = reducer_pp(1);
    let inst: Arc<str> = Arc::from("adopt");
    let script = AdversaryScript {
        static_corrupt: vec![ProcessId(5)],
        behaviors: vec![Behavior::Equivocate {
            digests: vec![mvba::codec::cro_hash(p.kappa, b"a"), mvba::codec::cro_hash(p.kappa, b"b")],
            kinds: vec!["stored".into(), "suggest".into()],
        }],
        ..Default::default()
    };
    let mut checked = 0;
    for seed in 0..10 {
        let spec = RunSpec { trace: true, ..RunSpec::new("adopt", p.clone(), seed, script.clone()) };
        let tr = harness::run_traced(&spec).unwrap();
        let mut committed = std::collections::BTreeMap::new();
        for (_, who, e) in &tr.events {
            match e {
                MvbaEvent::Committed { k, committed: c } => {
                    committed.insert((*who, *k), c.clone());
                }
                MvbaEvent::Adopted { k, x, digest } => {
                    let c: &Vec<mvba::Digest> = &committed[&(*who, *k)];
                    let mut coins = CoinOracle::new(seed, p.t);
                    let phi = coins.query(&CoinTag::noise(&inst, *k, *x), *who).as_noise(p.kappa);
                    let expect = c.iter().min_by_key(|z| salted_hash(p.kappa, z, &phi)).copied().unwrap_or(p.default_digest);
                    assert_eq!(*digest, expect, "seed={seed} {who} k={k} x={x}");
                    checked += 1;
                }
                _ => {}
            }
        }
    }
    assert!(checked > 0);
}

#[test]
fn replay_is_deterministic() {
    for p in [reducer(1), reducer_pp(1)] {
        let script = AdversaryScript {
            static_corrupt: vec![ProcessId(2)],
            behaviors: vec![Behavior::Mutate { probability: 0.3 }, Behavior::Replay { probability: 0.3 }],
            ..Default::default()
        };
        let spec = RunSpec { trace: true, ..RunSpec::new("replay", p, 11, script) };
        let a = harness::run_traced(&spec).unwrap();
        let b = harness::run_traced(&spec).unwrap();
        assert_eq!(serde_json::to_string(&a.metrics).unwrap(), serde_json::to_string(&b.metrics).unwrap());
        assert_eq!(a.events, b.events);
    }
}

#[test]
fn decisions_are_never_deeper_than_their_inputs_allow() {
    let p = reducer(1);
    let spec = RunSpec { trace: true, ..RunSpec::new("depth", p, 5, AdversaryScript::fault_free()) };
    let tr = harness::run_traced(&spec).unwrap();
    let dmax = tr.metrics.decision_depth.iter().flatten().max().copied().unwrap();
    let dmin = tr.metrics.decision_depth.iter().flatten().min().copied().unwrap();
    // Dissemination alone is INIT, ACK, DONE, FINISH.
    assert!(dmin >= 4 && dmax >= dmin);
}

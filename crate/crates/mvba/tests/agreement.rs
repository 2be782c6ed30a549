use mvba::agreement::{Gc, MbaOutcome};
use mvba::runtime::{AdversaryScript, Behavior, ProcessId};
use mvba::standalone::{self, StandaloneConfig};
use mvba::{Digest, Kappa};

fn d(b: u8) -> Digest {
    Digest::from_prefix(Kappa::DEFAULT, &[b, 0x5a])
}

fn byzantine(n: usize, t: usize, behaviors: Vec<Behavior>) -> AdversaryScript {
    AdversaryScript {
        static_corrupt: ((n - t + 1)..=n).map(|i| ProcessId(i as u16)).collect(),
        behaviors,
        ..Default::default()
    }
}

fn scripts(n: usize, t: usize) -> Vec<AdversaryScript> {
    vec![
        AdversaryScript::fault_free(),
        byzantine(n, t, vec![Behavior::Crash]),
        byzantine(n, t, vec![Behavior::Equivocate { digests: vec![d(1), d(2), d(9)], kinds: vec![] }]),
        byzantine(n, t, vec![Behavior::Mutate { probability: 0.5 }, Behavior::Replay { probability: 0.3 }]),
        byzantine(n, t, vec![Behavior::SilentOn(vec!["gc-vote".into(), "ba-aux".into()])]),
    ]
}

fn configs() -> Vec<(usize, usize)> {
    vec![(4, 1), (5, 1), (7, 2)]
}

#[test]
fn gc_unanimous_proposals_get_grade_one() {
    for (n, t) in configs() {
        for (si, script) in scripts(n, t).into_iter().enumerate() {
            for seed in 0..30 {
                let cfg = StandaloneConfig::new(n, t, seed);
                let run = standalone::run(&cfg, vec![d(1); n], standalone::gc(&cfg), script.clone()).unwrap();
                for (p, out) in run.first_outputs() {
                    assert_eq!(out, Some(&(d(1), true)), "n={n} script={si} seed={seed} {p}");
                }
            }
        }
    }
}

#[test]
fn gc_consistency_and_justification_under_split_proposals() {
    let mut graded_one = 0;
    for (n, t) in configs() {
        for (si, script) in scripts(n, t).into_iter().enumerate() {
            for seed in 0..200 {
                let cfg = StandaloneConfig::new(n, t, seed);
                let inputs: Vec<Digest> = (0..n).map(|i| if i % 3 == 2 { d(2) } else { d(1) }).collect();
                let correct: Vec<Digest> = inputs[..n - t].to_vec();
                let run = standalone::run(&cfg, inputs, standalone::gc(&cfg), script.clone()).unwrap();
                let outs: Vec<(Digest, bool)> =
                    run.first_outputs().into_iter().map(|(p, o)| *o.unwrap_or_else(|| panic!("{p} undecided"))).collect();
                for (v, _) in &outs {
                    assert!(correct.contains(v), "justification n={n} script={si} seed={seed}");
                }
                if let Some((w, _)) = outs.iter().find(|(_, g)| *g) {
                    graded_one += 1;
                    assert!(outs.iter().all(|(v, _)| v == w), "consistency n={n} script={si} seed={seed}: {outs:?}");
                }
            }
        }
    }
    assert!(graded_one > 0, "the split sample never exercised grade 1");
}

#[test]
fn gc_rejects_second_proposal() {
    let cfg = StandaloneConfig::new(4, 1, 0);
    let run = standalone::run(&cfg, vec![d(1); 4], standalone::gc(&cfg), AdversaryScript::fault_free()).unwrap();
    let mut gc: Gc<Digest> = run.nodes.into_iter().next().unwrap();
    assert!(gc.has_proposed());
    struct Null;
    impl mvba::runtime::Env<mvba::agreement::GcMsg<Digest>> for Null {
        fn me(&self) -> ProcessId {
            ProcessId(1)
        }
        fn n(&self) -> usize {
            4
        }
        fn t(&self) -> usize {
            1
        }
        fn send(&mut self, _: ProcessId, _: mvba::agreement::GcMsg<Digest>) {}
        fn broadcast(&mut self, _: mvba::agreement::GcMsg<Digest>) {}
        fn coin(&mut self, _: &mvba::coin::CoinTag) -> mvba::coin::CoinValue {
            unreachable!()
        }
    }
    assert!(gc.propose(d(2), &mut Null).is_err());
}

#[test]
fn ba_unanimity() {
    for (n, t) in configs() {
        for b in [false, true] {
            for seed in 0..30 {
                let cfg = StandaloneConfig::new(n, t, seed);
                let run = standalone::run(&cfg, vec![b; n], standalone::ba(&cfg), byzantine(n, t, vec![Behavior::Mutate { probability: 1.0 }])).unwrap();
                for (p, out) in run.first_outputs() {
                    assert_eq!(out, Some(&b), "n={n} seed={seed} {p}");
                }
                assert!(run.quiescent, "halting failed n={n} seed={seed}");
            }
        }
    }
}

#[test]
fn ba_agreement_and_expected_rounds() {
    let mut rounds = Vec::new();
    for seed in 0..500 {
        let cfg = StandaloneConfig::new(4, 1, seed);
        let inputs = vec![seed % 2 == 0, true, false, seed % 3 == 0];
        let run = standalone::run(&cfg, inputs, standalone::ba(&cfg), AdversaryScript::fault_free()).unwrap();
        let outs: Vec<bool> = run.first_outputs().into_iter().map(|(_, o)| *o.expect("decided")).collect();
        assert!(outs.windows(2).all(|w| w[0] == w[1]), "seed {seed}: {outs:?}");
        assert!(run.quiescent);
        let r = run.nodes.iter().filter_map(|b| b.decision_round()).max().unwrap();
        rounds.push(r as f64);
    }
    for (n, t) in configs() {
        for (si, script) in scripts(n, t).into_iter().enumerate() {
            for seed in 0..100 {
                let cfg = StandaloneConfig::new(n, t, seed);
                let inputs: Vec<bool> = (0..n).map(|i| (i as u64 + seed) % 2 == 0).collect();
                let run = standalone::run(&cfg, inputs, standalone::ba(&cfg), script.clone()).unwrap();
                let outs: Vec<bool> = run.first_outputs().into_iter().map(|(p, o)| *o.unwrap_or_else(|| panic!("{p}"))).collect();
                assert!(outs.windows(2).all(|w| w[0] == w[1]), "n={n} script={si} seed={seed}");
            }
        }
    }
    let mean = rounds.iter().sum::<f64>() / rounds.len() as f64;
    assert!(mean <= 4.0, "mean rounds {mean}");
}

#[test]
fn mba_strong_unanimity() {
    for (n, t) in configs() {
        for (si, script) in scripts(n, t).into_iter().enumerate() {
            for seed in 0..30 {
                let cfg = StandaloneConfig::new(n, t, seed);
                let run = standalone::run(&cfg, vec![d(7); n], standalone::mba(&cfg), script.clone()).unwrap();
                for (p, out) in run.first_outputs() {
                    assert_eq!(out, Some(&MbaOutcome::Value(d(7))), "n={n} script={si} seed={seed} {p}");
                }
            }
        }
    }
}

#[test]
fn mba_agreement_justification_and_adoption() {
    let mut bots = 0;
    let mut values = 0;
    for (n, t) in configs() {
        for (si, script) in scripts(n, t).into_iter().enumerate() {
            for seed in 0..100 {
                let cfg = StandaloneConfig::new(n, t, seed);
                let inputs: Vec<Digest> = (0..n).map(|i| d(1 + ((i as u64 + seed) % 2) as u8)).collect();
                let correct: Vec<Digest> = inputs[..n - t].to_vec();
                let run = standalone::run(&cfg, inputs, standalone::mba(&cfg), script.clone()).unwrap();
                let outs: Vec<MbaOutcome<Digest>> =
                    run.first_outputs().into_iter().map(|(p, o)| o.unwrap_or_else(|| panic!("{p}")).clone()).collect();
                assert!(outs.windows(2).all(|w| w[0] == w[1]), "agreement n={n} script={si} seed={seed}");
                match &outs[0] {
                    MbaOutcome::Value(v) => {
                        values += 1;
                        assert!(correct.contains(v), "justification n={n} script={si} seed={seed}");
                    }
                    MbaOutcome::Bot => bots += 1,
                }
                let correct_nodes: Vec<_> =
                    run.nodes.iter().enumerate().filter(|(i, _)| *i < n - t).map(|(_, m)| m).collect();
                if correct_nodes.iter().any(|m| m.gc().decision().is_some_and(|(_, g)| *g)) {
                    let adopted: Vec<Digest> = correct_nodes.iter().map(|m| m.gc().decision().unwrap().0).collect();
                    assert!(adopted.windows(2).all(|w| w[0] == w[1]), "adoption n={n} script={si} seed={seed}");
                }
            }
        }
    }
    assert!(bots > 0 && values > 0, "sample did not reach both outcomes: bots={bots} values={values}");
}

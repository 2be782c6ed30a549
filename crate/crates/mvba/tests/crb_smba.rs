use std::collections::BTreeMap;

use mvba::crb::{distinct, eliminated, Crb, Slot};
use mvba::runtime::{AdversaryScript, Behavior, ProcessId};
use mvba::standalone::{self, StandaloneConfig};
use mvba::{Digest, Kappa};
use proptest::prelude::*;

fn d(b: u8) -> Digest {
    Digest::from_prefix(Kappa::DEFAULT, &[b, 0x33])
}

fn last_t(n: usize, t: usize, behaviors: Vec<Behavior>) -> AdversaryScript {
    AdversaryScript {
        static_corrupt: ((n - t + 1)..=n).map(|i| ProcessId(i as u16)).collect(),
        behaviors,
        ..Default::default()
    }
}

fn scripts(n: usize, t: usize) -> Vec<AdversaryScript> {
    vec![
        AdversaryScript::fault_free(),
        last_t(n, t, vec![Behavior::Crash]),
        last_t(n, t, vec![Behavior::Equivocate { digests: vec![d(8), d(9)], kinds: vec![] }]),
        last_t(n, t, vec![Behavior::Mutate { probability: 0.5 }, Behavior::Replay { probability: 0.3 }]),
    ]
}

/// Largest subset of positive counts whose sum stays within `t`, found by
/// trying every subset.
fn brute_eliminated(counts: &[usize], t: usize) -> usize {
    let pos: Vec<usize> = counts.iter().copied().filter(|&c| c > 0).collect();
    let mut best = 0;
    for mask in 0u32..(1 << pos.len()) {
        let sum: usize = (0..pos.len()).filter(|i| mask >> i & 1 == 1).map(|i| pos[i]).sum();
        if sum <= t {
            best = best.max(mask.count_ones() as usize);
        }
    }
    best
}

proptest! {
    #[test]
    fn eliminated_matches_subset_search(counts in proptest::collection::vec(0usize..6, 0..10), t in 1usize..=4) {
        let num: BTreeMap<Digest, usize> = counts.iter().enumerate().map(|(i, &c)| (d(i as u8), c)).collect();
        prop_assert_eq!(eliminated(&num, t), brute_eliminated(&counts, t));
        prop_assert_eq!(distinct(&num), counts.iter().filter(|&&c| c > 0).count());
    }
}

#[test]
fn eliminated_hand_example() {
    let num: BTreeMap<Digest, usize> = [(d(1), 1), (d(2), 1), (d(3), 4)].into();
    assert_eq!((distinct(&num), eliminated(&num, 2)), (3, 2));
    assert_eq!((distinct(&BTreeMap::new()), eliminated(&BTreeMap::new(), 2)), (0, 0));
}

#[test]
#[should_panic]
fn crb_requires_four_t_plus_one() {
    Crb::new(6, 1);
}

#[test]
fn crb_unanimous_correct_inputs_deliver_that_digest() {
    for (n, t) in [(5, 1), (9, 2)] {
        for (si, script) in scripts(n, t).into_iter().enumerate() {
            for seed in 0..40 {
                let cfg = StandaloneConfig::new(n, t, seed);
                let inputs: Vec<Digest> = (0..n).map(|i| if i < n - t { d(1) } else { d(2) }).collect();
                let run = standalone::run(&cfg, inputs, standalone::crb(&cfg), script.clone()).unwrap();
                for (p, out) in run.first_outputs() {
                    assert_eq!(out, Some(&Slot::Digest(d(1))), "n={n} script={si} seed={seed} {p}");
                }
            }
        }
    }
}

#[test]
fn crb_totality_and_delivery_justification() {
    for (si, script) in scripts(5, 1).into_iter().enumerate() {
        for seed in 0..100 {
            let cfg = StandaloneConfig::new(5, 1, seed);
            let inputs: Vec<Digest> = (0..5).map(|i| d(1 + (i as u64 + seed) as u8 % 4)).collect();
            let correct = inputs[..4].to_vec();
            let run = standalone::run(&cfg, inputs, standalone::crb(&cfg), script.clone()).unwrap();
            let firsts = run.first_outputs();
            let any = firsts.iter().any(|(_, o)| o.is_some());
            for (p, out) in &firsts {
                assert!(!any || out.is_some(), "totality script={si} seed={seed} {p}");
            }
            for (p, _) in &firsts {
                for e in &run.outputs[p.idx()] {
                    if let Slot::Digest(z) = e.value {
                        assert!(correct.contains(&z), "delivered a digest no correct process sent: seed={seed}");
                    }
                }
            }
        }
    }
}

#[test]
fn smba_unanimity_and_two_digest_validity() {
    for (si, script) in scripts(5, 1).into_iter().enumerate() {
        for seed in 0..60 {
            let cfg = StandaloneConfig::new(5, 1, seed);
            let run = standalone::run(&cfg, vec![d(4); 5], standalone::smba(&cfg, d(0)), script.clone()).unwrap();
            for (p, out) in run.first_outputs() {
                assert_eq!(out, Some(&d(4)), "unanimity script={si} seed={seed} {p}");
            }
            let inputs: Vec<Digest> = (0..5).map(|i| if (i as u64 + seed) % 2 == 0 { d(1) } else { d(2) }).collect();
            let correct = inputs[..4].to_vec();
            let run = standalone::run(&cfg, inputs, standalone::smba(&cfg, d(0)), script.clone()).unwrap();
            let outs: Vec<Digest> = run.first_outputs().into_iter().map(|(p, o)| *o.unwrap_or_else(|| panic!("{p}"))).collect();
            assert!(outs.windows(2).all(|w| w[0] == w[1]), "agreement script={si} seed={seed}");
            assert!(correct.contains(&outs[0]), "strong validity script={si} seed={seed}");
        }
    }
}

#[test]
fn smba_four_way_split_still_agrees() {
    let mut defaults = 0;
    for (si, script) in scripts(5, 1).into_iter().enumerate() {
        for seed in 0..60 {
            let cfg = StandaloneConfig::new(5, 1, seed);
            let run = standalone::run(&cfg, (1..=5).map(d).collect(), standalone::smba(&cfg, d(0)), script.clone()).unwrap();
            let outs: Vec<Digest> = run.first_outputs().into_iter().map(|(p, o)| *o.unwrap_or_else(|| panic!("{p}"))).collect();
            assert!(outs.windows(2).all(|w| w[0] == w[1]), "agreement script={si} seed={seed}: {outs:?}");
            defaults += (outs[0] == d(0)) as usize;
        }
    }
    assert!(defaults > 0, "the split never fell back to the default digest");
}

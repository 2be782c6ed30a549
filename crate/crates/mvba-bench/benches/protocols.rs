use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mvba::harness::{self, RunSpec};
use mvba::mvba::{Epsilon, Params, Validity};
use mvba::runtime::AdversaryScript;
use mvba::standalone::{self, StandaloneConfig};
use mvba::{Digest, Kappa};

fn mvba_runs(c: &mut Criterion) {
    let mut g = c.benchmark_group("mvba");
    g.sample_size(20);
    for t in [1usize, 2] {
        let reducer = Arc::new(Params::reducer(t, 256, Kappa::DEFAULT, Validity::AlwaysTrue).unwrap());
        let pp = Arc::new(Params::reducer_pp(t, Epsilon::ONE, 256, Kappa::DEFAULT, Validity::AlwaysTrue).unwrap());
        for p in [reducer, pp] {
            let id = BenchmarkId::new(p.kind.name(), p.n);
            let mut seed = 0;
            g.bench_function(id, |b| {
                b.iter(|| {
                    seed += 1;
                    harness::run(&RunSpec::new("bench", p.clone(), seed, AdversaryScript::fault_free())).unwrap()
                })
            });
        }
    }
    g.finish();
}

fn smba_runs(c: &mut Criterion) {
    let kappa = Kappa::DEFAULT;
    let d = |b: u8| Digest::from_prefix(kappa, &[b]);
    let mut seed = 0;
    c.bench_function("smba/n=5/two-digest", |b| {
        b.iter(|| {
            seed += 1;
            let cfg = StandaloneConfig::new(5, 1, seed);
            let inputs = vec![d(1), d(2), d(1), d(2), d(1)];
            standalone::run(&cfg, inputs, standalone::smba(&cfg, d(0)), AdversaryScript::fault_free()).unwrap()
        })
    });
}

criterion_group!(benches, mvba_runs, smba_runs);
criterion_main!(benches);

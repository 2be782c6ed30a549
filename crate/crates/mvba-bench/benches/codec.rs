use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mvba::codec::{decode, disperse, encode, verify_witness};
use mvba::{Kappa, Value};

fn value(bits: u32) -> Value {
    let bytes: Vec<u8> = (0..bits.div_ceil(8)).map(|i| (i * 31 + 7) as u8).collect();
    Value::from_bytes_truncated(bytes, bits)
}

fn rs(c: &mut Criterion) {
    let mut g = c.benchmark_group("rs");
    for (t, ell) in [(1usize, 256u32), (4, 256), (4, 4096)] {
        let n = 4 * t + 1;
        let v = value(ell);
        let id = format!("n={n}/ell={ell}");
        g.bench_with_input(BenchmarkId::new("encode", &id), &v, |b, v| b.iter(|| encode(black_box(v), t, n).unwrap()));
        let symbols = encode(&v, t, n).unwrap();
        let part = &symbols[n - t - 1..];
        g.bench_with_input(BenchmarkId::new("decode", &id), part, |b, s| b.iter(|| decode(black_box(s), t, ell).unwrap()));
    }
    g.finish();
}

fn merkle(c: &mut Criterion) {
    let kappa = Kappa::DEFAULT;
    let mut g = c.benchmark_group("merkle");
    for t in [1usize, 4] {
        let n = 4 * t + 1;
        let v = value(4096);
        g.bench_function(BenchmarkId::new("disperse", n), |b| b.iter(|| disperse(kappa, black_box(&v), t, n).unwrap()));
        let enc = disperse(kappa, &v, t, n).unwrap();
        g.bench_function(BenchmarkId::new("verify", n), |b| {
            b.iter(|| verify_witness(kappa, &enc.digest, &enc.witnesses[n - 1], n, black_box(&enc.symbols[n - 1])))
        });
    }
    g.finish();
}

criterion_group!(benches, rs, merkle);
criterion_main!(benches);

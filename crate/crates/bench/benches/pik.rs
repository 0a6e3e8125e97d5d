use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hdmi_core::{pi_k, pi_k_inverse};
use std::hint::black_box;

fn forward(c: &mut Criterion) {
    let mut group = c.benchmark_group("pi_k");
    for k in [2usize, 20, 100] {
        group.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, &k| {
            b.iter(|| pi_k(black_box(k), black_box(1.7)).unwrap())
        });
    }
    group.finish();
}

fn inverse(c: &mut Criterion) {
    let mut group = c.benchmark_group("pi_k_inverse");
    for (k, e) in [(2usize, 0.2), (20, 0.5), (100, 0.05)] {
        group.bench_with_input(BenchmarkId::from_parameter(k), &(k, e), |b, &(k, e)| {
            b.iter(|| pi_k_inverse(black_box(e), black_box(k)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, forward, inverse);
criterion_main!(benches);

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use wl1_core::harness::gaussian_ensemble;
use wl1_core::rip::{compute_delta, compute_theta, randomized_lower_bound_delta};
use wl1_core::sharpness::build_counterexample;
use wl1_core::Rational;

fn enumeration(c: &mut Criterion) {
    let a = gaussian_ensemble(8, 16, 3);
    let mut group = c.benchmark_group("enumerate");
    for k in [2, 3, 4] {
        group.bench_function(format!("delta_{k}/8x16"), |b| {
            b.iter(|| compute_delta(black_box(&a), k).unwrap())
        });
    }
    for (k1, k2) in [(1, 1), (2, 2), (2, 3)] {
        group.bench_function(format!("theta_{k1}_{k2}/8x16"), |b| {
            b.iter(|| compute_theta(black_box(&a), k1, k2).unwrap())
        });
    }
    group.finish();

    let big = gaussian_ensemble(20, 40, 4);
    c.bench_function("sampled/delta_3/20x40/1000", |b| {
        b.iter(|| randomized_lower_bound_delta(black_box(&big), 3, 1000, 0).unwrap())
    });
}

fn counterexample(c: &mut Criterion) {
    c.bench_function("sharpness/build/12", |b| {
        b.iter(|| {
            build_counterexample(
                black_box(12),
                6,
                2,
                3,
                Rational::one(),
                Rational::one(),
                0.0,
            )
            .unwrap()
        })
    });
}

criterion_group!(benches, enumeration, counterexample);
criterion_main!(benches);

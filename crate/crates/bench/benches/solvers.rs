use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use wl1_bench::sparse_instance;
use wl1_core::solvers::{oracle_weighted_min, solve, ORACLE_BUDGET};
use wl1_core::{ConstraintKind, SolveConfig};

fn weighted_programs(c: &mut Criterion) {
    let cfg = SolveConfig::default();
    let mut group = c.benchmark_group("solve");
    for (n, big_n, k) in [(12, 24, 2), (32, 64, 4), (64, 128, 8)] {
        let (a, _, y) = sparse_instance(n, big_n, k, 1);
        // half the true support is trusted
        let w: Vec<f64> = (0..big_n)
            .map(|i| {
                if i < big_n / 2 && i % (big_n / k) == 0 {
                    0.5
                } else {
                    1.0
                }
            })
            .collect();
        for (name, kind, eta) in [
            ("exact", ConstraintKind::Exact, 0.0),
            ("l2", ConstraintKind::L2, 0.01),
            ("dantzig", ConstraintKind::Dantzig, 0.01),
        ] {
            group.bench_function(format!("{name}/{n}x{big_n}"), |b| {
                b.iter(|| solve(black_box(&a), black_box(&y), &w, kind, eta, &cfg).unwrap())
            });
        }
    }
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let (a, _, y) = sparse_instance(5, 10, 2, 2);
    let w = vec![1.0; 10];
    c.bench_function("oracle/exact/5x10", |b| {
        b.iter(|| {
            oracle_weighted_min(
                black_box(&a),
                &y,
                &w,
                ConstraintKind::Exact,
                0.0,
                ORACLE_BUDGET,
            )
            .unwrap()
        })
    });
    c.bench_function("oracle/l2/5x10", |b| {
        b.iter(|| {
            oracle_weighted_min(
                black_box(&a),
                &y,
                &w,
                ConstraintKind::L2,
                0.05,
                ORACLE_BUDGET,
            )
            .unwrap()
        })
    });
}

criterion_group!(benches, weighted_programs, oracle);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use narrascope::montecarlo::{randomize_test, Execution, StyleInputs};

fn synthetic_inputs(n: usize, dim: usize) -> StyleInputs {
    let projections: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..dim)
                .map(|a| ((i * 31 + a * 17) % 97) as f64 / 97.0 - 0.5)
                .collect()
        })
        .collect();
    let correlations = projections
        .iter()
        .map(|p| {
            let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
            Some(p.iter().map(|x| x / norm).collect())
        })
        .collect();
    let lengths = (0..n).map(|i| 20 + (i * 37) % 300).collect();
    StyleInputs {
        projections,
        correlations,
        lengths,
    }
}

fn bench_trials(c: &mut Criterion) {
    let mut group = c.benchmark_group("randomize_999");
    group.sample_size(10);
    for &n in &[11usize, 77] {
        let inputs = synthetic_inputs(n, n - 1);
        group.bench_with_input(BenchmarkId::new("sequential", n), &inputs, |b, inputs| {
            b.iter(|| {
                randomize_test(black_box(inputs), 999, 42, 80.0, Execution::Sequential).unwrap()
            })
        });
        group.bench_with_input(BenchmarkId::new("parallel", n), &inputs, |b, inputs| {
            b.iter(|| {
                randomize_test(
                    black_box(inputs),
                    999,
                    42,
                    80.0,
                    Execution::Parallel { threads: 0 },
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_trials);
criterion_main!(benches);

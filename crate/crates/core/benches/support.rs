use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use ceub_core::batch::{support_batch, Execution};
use ceub_core::gen::{gen_case, GenConfig, GenMode};
use ceub_core::maxmin::maxmin_lp;

fn cases(
    count: u64,
    agents: usize,
    items: usize,
) -> Vec<(ceub_core::Instance, ceub_core::Allocation)> {
    (0..count)
        .map(|seed| {
            let mode = if seed % 2 == 0 {
                GenMode::Welfare
            } else {
                GenMode::MaxMinPerturbed
            };
            gen_case(&GenConfig::new(seed, agents, items), mode).expect("generator")
        })
        .collect()
}

fn bench_support(c: &mut Criterion) {
    let mut group = c.benchmark_group("support_batch");
    group.sample_size(10);
    for &(n, m) in &[(3, 3), (5, 5), (8, 8)] {
        let batch = cases(64, n, m);
        let label = format!("{n}x{m}");
        for (name, exec) in [
            ("sequential", Execution::Sequential),
            ("parallel", Execution::Parallel),
        ] {
            group.bench_with_input(BenchmarkId::new(name, &label), &batch, |b, batch| {
                b.iter(|| support_batch(exec, batch))
            });
        }
    }
    group.finish();
}

fn bench_maxmin(c: &mut Criterion) {
    let insts: Vec<_> = cases(16, 5, 5).into_iter().map(|(i, _)| i).collect();
    c.bench_function("maxmin_lp_5x5", |b| {
        b.iter(|| insts.iter().map(maxmin_lp).collect::<Vec<_>>())
    });
}

criterion_group!(benches, bench_support, bench_maxmin);
criterion_main!(benches);

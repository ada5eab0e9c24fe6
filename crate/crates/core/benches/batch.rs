use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use hybrid_core::assess::bundled_corpus;
use hybrid_core::batch::{drop_sweep, grade_all, round_trip_all, run_many, Exec};
use hybrid_core::gen::programs;
use hybrid_core::lang::print;

fn modes() -> Vec<(&'static str, Exec)> {
    #[allow(unused_mut)]
    let mut v = vec![("sequential", Exec::Sequential)];
    #[cfg(feature = "parallel")]
    v.push(("parallel", Exec::Parallel));
    v
}

fn bench_round_trip(c: &mut Criterion) {
    let ps = programs(42, 1000);
    let mut g = c.benchmark_group("round_trip_1000");
    for (name, exec) in modes() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| round_trip_all(black_box(&ps), exec))
        });
    }
    g.finish();
}

fn bench_drop_sweep(c: &mut Criterion) {
    let sources: Vec<String> = programs(7, 40).iter().map(print).collect();
    let mut g = c.benchmark_group("drop_sweep_40");
    g.sample_size(20);
    for (name, exec) in modes() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| drop_sweep(black_box(&sources), exec))
        });
    }
    g.finish();
}

fn bench_run_and_grade(c: &mut Criterion) {
    let ps = programs(3, 1000);
    let tasks = bundled_corpus();
    let subs: Vec<_> = tasks
        .iter()
        .map(|t| Some(t.reference_submission()))
        .collect();
    let mut g = c.benchmark_group("run_and_grade");
    for (name, exec) in modes() {
        g.bench_function(BenchmarkId::new("run_1000", name), |b| {
            b.iter(|| run_many(black_box(&ps), 10_000, exec))
        });
        g.bench_function(BenchmarkId::new("grade_corpus", name), |b| {
            b.iter(|| grade_all(black_box(tasks), &subs, exec))
        });
    }
    g.finish();
}

criterion_group!(
    benches,
    bench_round_trip,
    bench_drop_sweep,
    bench_run_and_grade
);
criterion_main!(benches);

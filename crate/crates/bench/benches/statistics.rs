use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use lrdbreak::simulate::{simulate, ProcessSpec};
use lrdbreak::{
    critical_value, cusum_statistic, default_bandwidth, long_run_variance, multistage_classify,
    split_statistics, BandwidthRule, KernelWeights, SegmentationConfig, SplitConfig,
};

fn sample(n: usize) -> Vec<f64> {
    simulate(&ProcessSpec::farima(0.3).into(), n, 1).unwrap().into_inner()
}

fn bartlett(c: &mut Criterion) {
    let mut group = c.benchmark_group("long_run_variance");
    for n in [2021, 20_000, 100_000] {
        let x = sample(n);
        let w = KernelWeights::bartlett(default_bandwidth(n, BandwidthRule::default()).q);
        group.bench_with_input(BenchmarkId::from_parameter(n), &x, |b, x| {
            b.iter(|| long_run_variance(black_box(x), &w).unwrap())
        });
    }
    group.finish();
}

fn tests(c: &mut Criterion) {
    let x = sample(2021);
    let q = default_bandwidth(x.len(), BandwidthRule::default()).q;
    c.bench_function("cusum_statistic/2021", |b| b.iter(|| cusum_statistic(black_box(&x), q).unwrap()));
    let split = SplitConfig::default();
    c.bench_function("split_statistics/2021", |b| {
        b.iter(|| split_statistics(black_box(&x), &split).unwrap())
    });
    let seg = SegmentationConfig::default();
    c.bench_function("multistage_classify/2021", |b| {
        b.iter(|| multistage_classify(black_box(&x), &seg).unwrap())
    });
    c.bench_function("critical_value", |b| {
        b.iter(|| critical_value(black_box(3), black_box(0.05)).unwrap())
    });
}

criterion_group!(benches, bartlett, tests);
criterion_main!(benches);

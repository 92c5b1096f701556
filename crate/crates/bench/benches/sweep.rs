use criterion::{criterion_group, criterion_main, Criterion};
use spc_core::{asymptotic_peak, sweep, PeakOptions, QuadratureConfig, SpectralDensity};
use std::hint::black_box;

fn peaks(c: &mut Criterion) {
    let cfg = QuadratureConfig::default();
    let opts = PeakOptions::default();
    let sd = SpectralDensity::gaussian(1.0, 0.15, 3.0).unwrap();
    let mut group = c.benchmark_group("peaks");
    group.sample_size(10);
    group.bench_function("asymptotic_peak_tau_1", |b| {
        b.iter(|| asymptotic_peak(&sd, black_box(1.0), &opts, &cfg).unwrap())
    });
    let grid: Vec<f64> = (1..=20).map(|i| 0.5 * i as f64).collect();
    group.bench_function("sweep_20_points", |b| {
        b.iter(|| sweep(&sd, black_box(&grid), &opts, &cfg).unwrap())
    });
    group.finish();
}

criterion_group!(benches, peaks);
criterion_main!(benches);

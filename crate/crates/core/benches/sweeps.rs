//! Sequential (single-thread pool) versus parallel sweeps.
//!
//! With the `parallel` feature disabled both variants run the sequential
//! core and should time the same.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use duality_core::beam::{propagated_radius, GaussianMode, Transverse};
use duality_core::duality::{estimate_distinguishability, simulate_clicks, uniform_phase_grid, DualityModel};
use duality_core::estimators::{fit_gaussian_falloff_with, BootstrapOptions};
use duality_core::interference::{visibility_analytic, visibility_numeric, ArmConfiguration, SpectralFilter};
use rayon::{ThreadPool, ThreadPoolBuilder};

const LAMBDA: f64 = 808e-9;

fn pools() -> [(&'static str, ThreadPool); 2] {
    [
        ("sequential", ThreadPoolBuilder::new().num_threads(1).build().unwrap()),
        ("parallel", ThreadPoolBuilder::new().build().unwrap()),
    ]
}

fn monte_carlo(c: &mut Criterion) {
    let w = propagated_radius(82.5e-6, 0.661, LAMBDA);
    let filter = SpectralFilter::new(LAMBDA, 2.5e-9).unwrap();
    let model = DualityModel::new(w, 0.9, Transverse::tangential(0.5 * w)).unwrap();
    let grid = uniform_phase_grid(200);
    let mut group = c.benchmark_group("monte_carlo");
    for (label, pool) in pools() {
        group.bench_function(BenchmarkId::new("simulate_and_bootstrap", label), |b| {
            b.iter(|| {
                pool.install(|| {
                    let stream = simulate_clicks(&model, &filter, 0.0, &grid, 100_000, 7).unwrap();
                    black_box(estimate_distinguishability(&stream).unwrap())
                })
            })
        });
    }
    group.finish();
}

fn numeric_visibility(c: &mut Criterion) {
    let w = 2.06e-3;
    let mode = GaussianMode::new(w, LAMBDA).unwrap();
    let configs: Vec<ArmConfiguration> = (0..8)
        .map(|i| {
            let shifted = mode.with_offset(Transverse::tangential(0.5 * w * i as f64)).unwrap();
            ArmConfiguration::new(mode, shifted).unwrap()
        })
        .collect();
    let mut group = c.benchmark_group("visibility_numeric");
    group.sample_size(10);
    for (label, pool) in pools() {
        group.bench_function(BenchmarkId::new("sweep_8", label), |b| {
            b.iter(|| pool.install(|| configs.iter().map(|c| visibility_numeric(c, 0.0).unwrap()).sum::<f64>()))
        });
    }
    group.finish();
}

fn bootstrap_fit(c: &mut Criterion) {
    let w = 2.06e-3;
    let points: Vec<(f64, f64)> = (-12..=12)
        .map(|i| {
            let x = i as f64 * 0.5e-3;
            (x, 0.9 * visibility_analytic(x, w) + 0.01 * ((i * 7) % 5 - 2) as f64)
        })
        .collect();
    let mut group = c.benchmark_group("gaussian_fit");
    for (label, pool) in pools() {
        group.bench_function(BenchmarkId::new("bootstrap_1000", label), |b| {
            b.iter(|| {
                pool.install(|| black_box(fit_gaussian_falloff_with(&points, BootstrapOptions::default()).unwrap()))
            })
        });
    }
    group.finish();
}

criterion_group!(benches, monte_carlo, numeric_visibility, bootstrap_fit);
criterion_main!(benches);

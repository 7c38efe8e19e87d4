use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use statvar::forecast::{crps_sample, energy_score, log_score_mixture, predictive_from_models, ForecastMode};
use statvar_bench::{model, series};

/// Deterministic, well-spread pseudo-samples.
fn samples(k: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..k)
        .map(|i| (0..dim).map(|j| ((i * 7919 + j * 104_729) % 1000) as f64 / 250.0 - 2.0).collect())
        .collect()
}

fn scores(c: &mut Criterion) {
    let mut g = c.benchmark_group("scores");
    for k in [100, 1000] {
        let xs: Vec<f64> = samples(k, 1).into_iter().map(|v| v[0]).collect();
        let vars = vec![1.0; k];
        let pts = samples(k, 7);
        let y = vec![0.3; 7];
        g.bench_with_input(BenchmarkId::new("crps", k), &xs, |b, x| b.iter(|| crps_sample(black_box(x), 0.3).unwrap()));
        g.bench_with_input(BenchmarkId::new("log_score", k), &xs, |b, x| {
            b.iter(|| log_score_mixture(black_box(x), &vars, 0.3).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("energy_m7", k), &pts, |b, x| {
            b.iter(|| energy_score(black_box(x), &y).unwrap())
        });
    }
    g.finish();
}

fn predictive(c: &mut Criterion) {
    let models: Vec<_> = (0..200).map(|s| model(3, 2, s)).collect();
    let y = series(3, 2, 240);
    let mut g = c.benchmark_group("predictive_200draws_40pts");
    for mode in [ForecastMode::Rolling, ForecastMode::FixedOrigin] {
        g.bench_function(mode.name(), |b| {
            b.iter(|| predictive_from_models(black_box(&models), &y, 200, 40, mode, 1).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, scores, predictive);
criterion_main!(benches);

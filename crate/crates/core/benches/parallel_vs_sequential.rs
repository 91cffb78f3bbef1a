//! Rayon vs single-thread execution of the same workloads. Both arms run
//! identical per-point code, so the ratio is the parallel speedup.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use kantorovich::analysis::{default_deltas, modulus_curve};
use kantorovich::fields::{Rect, TestField};
use kantorovich::kernels::{build_bochner_riesz, build_tensor_bspline, shipped_compact_kernels};
use kantorovich::moments::{absolute_moment_sup, Truncation};
use kantorovich::operator::{apply_on_grid, make_paper_scheme, resample_image, IntervalScheme};
use kantorovich::pgm::Raster;
use kantorovich::{EvalSettings, GridSpec};

const MODES: [(&str, bool); 2] = [("parallel", true), ("sequential", false)];

fn settings(parallel: bool) -> EvalSettings {
    EvalSettings {
        parallel,
        ..EvalSettings::default()
    }
}

fn grid_evaluation(c: &mut Criterion) {
    let kernel = shipped_compact_kernels()
        .into_iter()
        .find(|(n, _)| *n == "translated-signed")
        .unwrap()
        .1;
    let scheme = make_paper_scheme();
    let grid = GridSpec::square(-1.0, 1.0, 64);
    let mut group = c.benchmark_group("apply_on_grid_64x64");
    for (label, parallel) in MODES {
        group.bench_function(BenchmarkId::from_parameter(label), |b| {
            b.iter(|| {
                apply_on_grid(
                    &kernel,
                    &TestField::Gaussian,
                    &scheme,
                    16.0,
                    &grid,
                    &settings(parallel),
                )
            })
        });
    }
    group.finish();
}

fn moment_scan(c: &mut Criterion) {
    let compact = build_tensor_bspline(3, 3);
    let br = build_bochner_riesz(3.0).unwrap();
    let mut group = c.benchmark_group("absolute_moment_sup");
    for (label, parallel) in MODES {
        group.bench_function(BenchmarkId::new("beta3xbeta3_101", label), |b| {
            b.iter(|| absolute_moment_sup(&compact, 2, 0, Truncation::Exact, 101, parallel))
        });
        group.bench_function(BenchmarkId::new("bochner_riesz_R40_11", label), |b| {
            b.iter(|| absolute_moment_sup(&br, 2, 0, Truncation::Radius(40.0), 11, parallel))
        });
    }
    group.finish();
}

fn image_resampling(c: &mut Criterion) {
    let pixels: Vec<u8> = (0..64 * 64).map(|i| ((i * 37) % 256) as u8).collect();
    let image = Raster::new(64, 64, pixels).unwrap();
    let kernel = build_tensor_bspline(3, 3);
    let scheme = IntervalScheme::uniform(1.0, 1.0).unwrap();
    let mut group = c.benchmark_group("resample_64_to_160");
    for (label, parallel) in MODES {
        group.bench_function(BenchmarkId::from_parameter(label), |b| {
            b.iter(|| resample_image(&kernel, &image, &scheme, 1.0, 2.5, &settings(parallel)))
        });
    }
    group.finish();
}

fn modulus_sampling(c: &mut Criterion) {
    let deltas = default_deltas(1e-4, 1.0, 32);
    let domain = Rect::new(-1.0, 1.0, -1.0, 1.0);
    let mut group = c.benchmark_group("modulus_curve_32");
    group.sample_size(20);
    for (label, parallel) in MODES {
        group.bench_function(BenchmarkId::from_parameter(label), |b| {
            b.iter(|| modulus_curve(&TestField::SinCos, &deltas, &domain, 10_000, 1, parallel))
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    grid_evaluation,
    moment_scan,
    image_resampling,
    modulus_sampling
);
criterion_main!(benches);

//! Criterion benchmarks for the hot paths: kernel evaluation, the epsilon
//! fit and a full estimate in one and two dimensions.

use std::hint::black_box;

use criterion::{BenchmarkId, Criterion, Throughput};
use l2d_core::sim::{sample_design, DesignKind, SimDesign};
use l2d_core::tmle::{epsilon_bounds, fit_epsilon};
use l2d_core::{
    build_grid, estimate_l2d, kde, kde_fit, Arm, Density, EstimateOptions, LabeledDataset, PointSet,
};

fn gaussian_sample(n: usize, seed: u64) -> LabeledDataset {
    sample_design(&SimDesign::new(DesignKind::Gaussian), n, seed).expect("sampling")
}

/// Two independent 1-D draws zipped into planar points per arm.
fn planar_sample(n: usize) -> LabeledDataset {
    let a = gaussian_sample(n, 1);
    let b = gaussian_sample(n, 2);
    let arm = |arm| {
        let (x, y) = (a.arm_points(arm), b.arm_points(arm));
        let pts: Vec<[f64; 2]> = x
            .coords()
            .iter()
            .zip(y.coords())
            .map(|(p, q)| [*p, *q])
            .collect();
        PointSet::from_2d(&pts)
    };
    LabeledDataset::from_arms(&arm(Arm::Zero), &arm(Arm::One)).expect("dataset")
}

pub fn kde_evaluation(c: &mut Criterion) {
    let mut group = c.benchmark_group("kde_eval_grid_401");
    for n in [800, 3200, 12800] {
        let x = gaussian_sample(n, 3).arm_points(Arm::Zero);
        let fit = kde_fit(&x, &kde::plug_in_bandwidth(&x).unwrap()).unwrap();
        let grid = build_grid(&[(-3.0, 3.5)], 401).unwrap();
        group.throughput(Throughput::Elements(n as u64));
        group.bench_with_input(BenchmarkId::new("fast", n), &n, |b, _| {
            b.iter(|| fit.eval_grid(black_box(&grid)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("direct", n), &n, |b, _| {
            b.iter(|| fit.eval_direct(black_box(grid.points())).unwrap())
        });
    }
    group.finish();
}

pub fn epsilon_fit(c: &mut Criterion) {
    let d: Vec<f64> = (0..1600)
        .map(|k| ((k * 7919) % 1000) as f64 / 250.0 - 1.9)
        .collect();
    let bounds = epsilon_bounds(&d).unwrap();
    c.bench_function("fit_epsilon_1600", |b| {
        b.iter(|| fit_epsilon(black_box(&d), &bounds))
    });
}

pub fn full_estimate(c: &mut Criterion) {
    let opts = EstimateOptions::default();
    let line = gaussian_sample(800, 4);
    c.bench_function("estimate_l2d_1d_n800", |b| {
        b.iter(|| estimate_l2d(black_box(&line), &opts).unwrap())
    });
    let plane = planar_sample(500);
    let mut group = c.benchmark_group("planar");
    group.sample_size(10);
    group.bench_function("estimate_l2d_2d_n500", |b| {
        b.iter(|| estimate_l2d(black_box(&plane), &opts).unwrap())
    });
    group.finish();
}

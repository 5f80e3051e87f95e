//! Parallel against sequential execution of the data-parallel sweeps.
//!
//! Each group runs the same workload twice: through the rayon-backed helpers
//! and inside `par::sequential`, which forces them onto the calling thread.
//! Build with `--no-default-features` to drop rayon altogether.

use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mfe_core::barycenter::{self, BarycenterMeasure, DistanceOracle, SlopeOptions};
use mfe_core::functional::{self, FieldScale, MfeParams};
use mfe_core::par;
use mfe_core::{DiscreteOperators, SurfaceMesh};

fn modes_for(ops: &DiscreteOperators) -> Vec<mfe_core::Eigenpair> {
    ops.low_eigenpairs(31).unwrap()
}

fn slopes(c: &mut Criterion) {
    let mesh = SurfaceMesh::unit_sphere(5).unwrap();
    let ops = DiscreteOperators::assemble(&mesh).unwrap();
    let sigma = BarycenterMeasure::dirac(0);
    let grid = [10.0, 20.0, 50.0, 100.0, 200.0];
    let opts = SlopeOptions::default();
    let mut g = c.benchmark_group("asymptotic_slopes");
    g.bench_function(BenchmarkId::new("parallel", "sphere5"), |b| {
        b.iter(|| barycenter::asymptotic_slopes(&mesh, &ops, &sigma, black_box(&grid), &opts).unwrap())
    });
    g.bench_function(BenchmarkId::new("sequential", "sphere5"), |b| {
        b.iter(|| {
            par::sequential(|| barycenter::asymptotic_slopes(&mesh, &ops, &sigma, black_box(&grid), &opts).unwrap())
        })
    });
    g.finish();
}

fn mt(c: &mut Criterion) {
    let mesh = SurfaceMesh::unit_sphere(4).unwrap();
    let ops = DiscreteOperators::assemble(&mesh).unwrap();
    let modes = modes_for(&ops);
    let scale = FieldScale::Dirichlet(1000.0);
    let mut g = c.benchmark_group("mt_sweep");
    g.bench_function(BenchmarkId::new("parallel", 200), |b| {
        b.iter(|| functional::mt_sweep(&ops, &modes[1..], 200, black_box(0), scale).unwrap())
    });
    g.bench_function(BenchmarkId::new("sequential", 200), |b| {
        b.iter(|| par::sequential(|| functional::mt_sweep(&ops, &modes[1..], 200, black_box(0), scale).unwrap()))
    });
    g.finish();
}

fn distance(c: &mut Criterion) {
    let mesh = SurfaceMesh::unit_sphere(3).unwrap();
    let ops = DiscreteOperators::assemble(&mesh).unwrap();
    let sigma = BarycenterMeasure::uniform(&mesh.farthest_point_sample(2, 0)).unwrap();
    let phi = barycenter::test_function(&mesh, &sigma, barycenter::BubbleScale::new(30.0).unwrap());
    let f = barycenter::exp_density(&ops, &phi);
    let oracle = DistanceOracle::new(&mesh, &ops).unwrap();
    let mut g = c.benchmark_group("dist_to_barycenters");
    g.bench_function(BenchmarkId::new("parallel", "k2"), |b| {
        b.iter(|| oracle.evaluate(black_box(&f), 2).unwrap())
    });
    g.bench_function(BenchmarkId::new("sequential", "k2"), |b| {
        b.iter(|| par::sequential(|| oracle.evaluate(black_box(&f), 2).unwrap()))
    });
    g.finish();
}

fn minmax_calibration(c: &mut Criterion) {
    let mesh = SurfaceMesh::flat_torus(32, 32, 1.0).unwrap();
    let ops = DiscreteOperators::assemble(&mesh).unwrap();
    let p = MfeParams::new(10.0 * PI, 0.0);
    let cfg = mfe_core::solver::MinMaxConfig::default();
    let mut g = c.benchmark_group("minmax_calibrate");
    g.bench_function(BenchmarkId::new("parallel", "torus32"), |b| {
        b.iter(|| mfe_core::solver::calibrate(&mesh, &ops, black_box(&p), &cfg).unwrap())
    });
    g.bench_function(BenchmarkId::new("sequential", "torus32"), |b| {
        b.iter(|| par::sequential(|| mfe_core::solver::calibrate(&mesh, &ops, black_box(&p), &cfg).unwrap()))
    });
    g.finish();
}

criterion_group!(
    name = sweeps;
    config = Criterion::default().sample_size(10);
    targets = slopes, mt, distance, minmax_calibration
);
criterion_main!(sweeps);

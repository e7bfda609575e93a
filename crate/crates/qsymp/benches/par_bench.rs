//! Thread-count comparison of the two dominant data-parallel stages: the
//! Newton seed sweep of the census and the smoothed Monte Carlo counter.
//! With the `parallel` feature the same workload runs inside a 1-thread and
//! an all-cores rayon pool; without it only the sequential path exists.

use criterion::{criterion_group, criterion_main, Criterion};
use nalgebra::{DMatrix, DVector};

use qsymp::critical::{enumerate_critical, CensusOptions, IndexClass};
use qsymp::density::kac_rice_mc;
use qsymp::field::{Mode, QuasiPeriodicScalar, TorusPoint};

fn baseline() -> (QuasiPeriodicScalar, DMatrix<f64>) {
    let field = QuasiPeriodicScalar::new(
        2,
        vec![Mode::cos(vec![1, 0], 0.05), Mode::cos(vec![0, 1], 0.05)],
    )
    .unwrap();
    (field, DMatrix::identity(2, 2))
}

fn census_sweep() -> usize {
    let (field, a) = baseline();
    let base = TorusPoint::zero(2);
    let census = enumerate_critical(
        &field,
        &a,
        &base,
        &DVector::zeros(2),
        2.0,
        &CensusOptions::default(),
    )
    .unwrap();
    census.points.len()
}

fn smoothed_count() -> f64 {
    let (field, a) = baseline();
    kac_rice_mc(&field, &a, 0.05, 200_000, 42, IndexClass::Any, 1e-8)
        .unwrap()
        .value
}

#[cfg(feature = "parallel")]
fn thread_scaling(c: &mut Criterion) {
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let all = rayon::ThreadPoolBuilder::new().build().unwrap();

    let mut census = c.benchmark_group("census_sweep");
    census.sample_size(10);
    census.bench_function("one_thread", |b| b.iter(|| one.install(census_sweep)));
    census.bench_function("all_threads", |b| b.iter(|| all.install(census_sweep)));
    census.finish();

    let mut mc = c.benchmark_group("smoothed_count");
    mc.sample_size(10);
    mc.bench_function("one_thread", |b| b.iter(|| one.install(smoothed_count)));
    mc.bench_function("all_threads", |b| b.iter(|| all.install(smoothed_count)));
    mc.finish();
}

#[cfg(not(feature = "parallel"))]
fn thread_scaling(c: &mut Criterion) {
    let mut census = c.benchmark_group("census_sweep");
    census.sample_size(10);
    census.bench_function("sequential", |b| b.iter(census_sweep));
    census.finish();

    let mut mc = c.benchmark_group("smoothed_count");
    mc.sample_size(10);
    mc.bench_function("sequential", |b| b.iter(smoothed_count));
    mc.finish();
}

criterion_group!(benches, thread_scaling);
criterion_main!(benches);

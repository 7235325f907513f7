//! Timings of the hot kernels: trajectory simulation, Petz maps, the
//! Wasserstein distance, shadow reconstruction and the reverse Fokker-Planck
//! solver.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qdiff_core::blochfp::{backward_fp, forward_fp, SphereField, SphereGrid};
use qdiff_core::ensembles::{random_mixed, random_pure};
use qdiff_core::forward::simulate_member;
use qdiff_core::pauli::strings_up_to_weight;
use qdiff_core::petz::{depolarizing_step, petz_superop, TwirlMethod};
use qdiff_core::reverse_learn::wasserstein1;
use qdiff_core::rng::stream;
use qdiff_core::shadows::{reconstruct, ReconstructOptions};
use qdiff_core::{MeasurementRecord, PureState, SchedulePolicy};

fn trajectories(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate_member");
    let policy = SchedulePolicy::uniform(1);
    for n in [2usize, 4, 6] {
        let psi0 = random_pure(n, &mut stream(2, n as u64));
        group.bench_with_input(BenchmarkId::from_parameter(n), &psi0, |b, psi0| {
            b.iter(|| simulate_member(black_box(psi0), &policy, 1.0, 0.01, 300, 0).unwrap())
        });
    }
    group.finish();
}

fn petz(c: &mut Criterion) {
    let mut group = c.benchmark_group("petz_superop");
    let prior = random_mixed(3, &mut stream(3, 0));
    let forward = depolarizing_step(3, 1, 0.97);
    for (name, method) in [("closed_form", TwirlMethod::ClosedForm), ("untwirled", TwirlMethod::Untwirled)] {
        group.bench_function(name, |b| b.iter(|| petz_superop(black_box(&prior), &forward, method).unwrap()));
    }
    group.finish();
}

fn wasserstein(c: &mut Criterion) {
    let mut group = c.benchmark_group("wasserstein1");
    group.sample_size(20);
    for m in [50usize, 200] {
        let a: Vec<PureState> = (0..m).map(|i| random_pure(2, &mut stream(4, i as u64))).collect();
        let b: Vec<PureState> = (0..m).map(|i| random_pure(2, &mut stream(5, i as u64))).collect();
        group.bench_with_input(BenchmarkId::from_parameter(m), &(a, b), |bench, (a, b)| {
            bench.iter(|| wasserstein1(black_box(a), black_box(b)).unwrap())
        });
    }
    group.finish();
}

fn shadows(c: &mut Criterion) {
    let policy = SchedulePolicy::uniform(6);
    let psi0 = PureState::basis(2, 0);
    let records: Vec<MeasurementRecord> =
        (0..2000).map(|i| simulate_member(&psi0, &policy, 1.0, 0.05, 60, i).unwrap().1).collect();
    let targets = strings_up_to_weight(2, 2);
    let opts = ReconstructOptions::default();
    c.bench_function("reconstruct/2000x2q", |b| b.iter(|| reconstruct(black_box(&records), &targets, &opts).unwrap()));
}

fn reverse_fp(c: &mut Criterion) {
    let mut group = c.benchmark_group("backward_fp");
    group.sample_size(10);
    let mut p0 = SphereField::uniform(2);
    p0.set(1, 0, 0.06);
    p0.set(2, 1, 0.02);
    let evolved = forward_fp(&p0, 1.0, 1, 0.2);
    for (n_theta, dt) in [(16usize, 4e-3), (32, 2e-3)] {
        let grid = SphereGrid::new(n_theta, 2 * n_theta);
        let start = grid.sample(&evolved);
        group.bench_with_input(BenchmarkId::from_parameter(n_theta), &grid, |b, grid| {
            b.iter(|| backward_fp(grid, black_box(&start), &p0, 1.0, 1, 0.2, dt).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, trajectories, petz, wasserstein, shadows, reverse_fp);
criterion_main!(benches);

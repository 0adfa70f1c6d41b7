//! One-thread pool against the default pool for the hot kernels: the
//! spectral kinetic energy, a fixed number of flow iterations, and the
//! rotation search.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use gpring::asymptotics;
use gpring::grid::{self, Grid2D};
use gpring::interp;
use gpring::par;
use gpring::potential::tabulate;
use gpring::solver;
use gpring::{PotentialSpec, SolveConfig};

fn pools() -> [(&'static str, usize); 2] {
    [("one_thread", 1), ("default", 0)]
}

fn kinetic(c: &mut Criterion) {
    let mut group = c.benchmark_group("kinetic");
    for n in [256usize, 512] {
        let g = Grid2D::new(n, 16.0).unwrap();
        let u = solver::gaussian_bump(g, (1.0, 0.0), 0.7);
        for (name, workers) in pools() {
            group.bench_with_input(BenchmarkId::new(name, n), &u, |b, u| {
                b.iter(|| par::with_workers(workers, || grid::kinetic(u)))
            });
        }
    }
    group.finish();
}

fn flow_iterations(c: &mut Criterion) {
    let g = Grid2D::new(256, 16.0).unwrap();
    let v = tabulate(&PotentialSpec::ring(1.0), &g);
    let init = solver::gaussian_bump(g, (0.8, 0.1), 0.8);
    // A fixed iteration budget; the solve is expected to stop short.
    let cfg = SolveConfig {
        max_iters: 20,
        ..SolveConfig::default()
    };
    let mut group = c.benchmark_group("flow_20_iters");
    group.sample_size(10);
    for (name, workers) in pools() {
        group.bench_function(name, |b| {
            b.iter(|| par::with_workers(workers, || solver::minimize(&v, 6.0, &init, &cfg).is_ok()))
        });
    }
    group.finish();
}

fn rotation_search(c: &mut Criterion) {
    let g = Grid2D::new(128, 10.0).unwrap();
    let u = grid::normalize(&solver::gaussian_bump(g, (1.0, 0.0), 0.4)).unwrap();
    let v = interp::rotate(&u, 0.9);
    let mut group = c.benchmark_group("rotation_search");
    group.sample_size(10);
    for (name, workers) in pools() {
        group.bench_function(name, |b| {
            b.iter(|| par::with_workers(workers, || asymptotics::rotation_modded_distance(&u, &v).0))
        });
    }
    group.finish();
}

criterion_group!(benches, kinetic, flow_iterations, rotation_search);
criterion_main!(benches);

// Run once with default features and once with `--no-default-features`;
// with rayon on, each workload is also timed inside a one-thread pool.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hyperising::dynamics::{hit, Target};
use hyperising::energy::SpinConfig;
use hyperising::landscape::{global_minimizers, min_perimeter_table};
use hyperising::lattice::build;
use hyperising::{par, ModelParams};
use std::hint::black_box;

fn modes() -> Vec<(&'static str, Option<usize>)> {
    if par::enabled() {
        vec![("parallel", None), ("one-thread", Some(1))]
    } else {
        vec![("sequential-fallback", None)]
    }
}

fn in_mode<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match threads {
        #[cfg(feature = "parallel")]
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .unwrap()
            .install(f),
        _ => f(),
    }
}

fn replicas(c: &mut Criterion) {
    let g = build(4, 5, 1).unwrap();
    let p = ModelParams::new(4, 5, 1, "19/10".parse().unwrap(), 2.0).unwrap();
    let start = SpinConfig::all_plus(g.len());
    let mut grp = c.benchmark_group("hit_replicas");
    grp.sample_size(10);
    for (name, threads) in modes() {
        grp.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| in_mode(threads, || hit(&g, &p, &start, Target::AllMinus, 1 << 22, 7, 16).unwrap()))
        });
    }
    grp.finish();
}

fn exhaustive(c: &mut Criterion) {
    let g = build(4, 5, 1).unwrap();
    let h = "21/10".parse().unwrap();
    let mut grp = c.benchmark_group("energy_table_2e24");
    grp.sample_size(10);
    for (name, threads) in modes() {
        grp.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| in_mode(threads, || black_box(global_minimizers(&g, h).unwrap())))
        });
    }
    grp.finish();
}

fn animals(c: &mut Criterion) {
    let g = build(5, 5, 2).unwrap();
    let mut grp = c.benchmark_group("min_perimeter_area8");
    grp.sample_size(10);
    for (name, threads) in modes() {
        grp.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| in_mode(threads, || black_box(min_perimeter_table(&g, 8).unwrap())))
        });
    }
    grp.finish();
}

criterion_group!(benches, replicas, exhaustive, animals);
criterion_main!(benches);

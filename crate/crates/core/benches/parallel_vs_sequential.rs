use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use devroye_lab::exec::{parallel, sequential};
use devroye_lab::measure::{kantorovich_to, DensityModel, EmpiricalMeasure};
use devroye_lab::process::{generate_trajectory, replica_seed, MapSpec};

/// One Monte Carlo replica: a doubling-map orbit and its Kantorovich distance to Lebesgue.
fn replica(r: usize, n: usize) -> f64 {
    let t = generate_trajectory(&MapSpec::doubling(), n, 100, replica_seed(42, r)).expect("orbit");
    kantorovich_to(&EmpiricalMeasure::of(&t).expect("sample"), &DensityModel::uniform()).expect("distance")
}

fn bench(c: &mut Criterion) {
    let mut group = c.benchmark_group("kantorovich_replicas");
    group.sample_size(10);
    for n in [1_000usize, 10_000] {
        let replicas = 200;
        group.bench_with_input(BenchmarkId::new("sequential", n), &n, |b, &n| {
            b.iter(|| sequential::map_indexed(replicas, |r| replica(r, n)))
        });
        group.bench_with_input(BenchmarkId::new("parallel", n), &n, |b, &n| {
            b.iter(|| parallel::map_indexed(replicas, |r| replica(r, n)))
        });
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qshearer_bench::{hexagonal_patch, k7_population, qubit_cycle_instance, random_3_uniform};
use qshearer_core::cavity::{sweep_lambda, ContinuationSchedule};
use qshearer_core::hypergraph::build_dependency_graph;
use qshearer_core::indpoly::{first_negative_zero, independence_polynomial};
use qshearer_core::popdyn::popdyn_step;
use qshearer_core::qsat::{build_hamiltonian, kernel_dimension};

fn indpoly(c: &mut Criterion) {
    let mut group = c.benchmark_group("indpoly");
    for side in [3, 4] {
        let g = build_dependency_graph(&hexagonal_patch(side));
        group.bench_with_input(BenchmarkId::new("hexagonal", side), &g, |b, g| {
            b.iter(|| first_negative_zero(&independence_polynomial(g).unwrap()).unwrap())
        });
    }
    group.finish();
}

fn bp(c: &mut Criterion) {
    let h = random_3_uniform(2000, 7);
    let schedule = ContinuationSchedule::default();
    c.bench_function("bp_sweep_er_2000", |b| b.iter(|| sweep_lambda(&h, 0.0, -0.05, 10, &schedule)));
}

fn popdyn(c: &mut Criterion) {
    let mut group = c.benchmark_group("popdyn_step");
    for size in [10_000, 100_000] {
        let pop = k7_population(size);
        group.bench_with_input(BenchmarkId::from_parameter(size), &pop, |b, pop| b.iter(|| popdyn_step(pop)));
    }
    group.finish();
}

fn kernel(c: &mut Criterion) {
    let mut group = c.benchmark_group("kernel");
    group.sample_size(10);
    for n in [6, 8] {
        let h = build_hamiltonian(&qubit_cycle_instance(n)).unwrap();
        group.bench_with_input(BenchmarkId::new("cycle", n), &h, |b, h| b.iter(|| kernel_dimension(h, None).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, indpoly, bp, popdyn, kernel);
criterion_main!(benches);

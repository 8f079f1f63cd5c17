//! Criterion benchmarks for the dense kernels behind the certificates.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use semigen_bench::{heat_generator, wave_fixture};
use semigen_core::blockops::build_as;
use semigen_core::linalg::{expm, lu_solve, Matrix, C64};
use semigen_core::sampler::{Sampler, DEFAULT_SEED};
use semigen_core::sip::{GridSpace, Space};
use semigen_core::tol::Tolerances;

fn bench_assembly(c: &mut Criterion) {
    let (model, closure) = wave_fixture(64);
    c.bench_function("build_as_n64", |b| {
        b.iter(|| build_as(&model.blocks, &closure).unwrap())
    });
}

fn bench_lu_solve(c: &mut Criterion) {
    let tol = Tolerances::default();
    let a = heat_generator(64);
    let shifted = Matrix::identity(a.rows())
        .scale(C64::new(0.5, 0.0))
        .sub(&a);
    let mut sampler = Sampler::new(DEFAULT_SEED);
    let g = sampler.complex_vector(a.rows());
    c.bench_function("lu_solve_n64", |b| {
        b.iter_batched(
            || (shifted.clone(), g.clone()),
            |(m, rhs)| lu_solve(&m, &rhs, &tol).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

fn bench_expm(c: &mut Criterion) {
    let tol = Tolerances::default();
    let a = heat_generator(16);
    c.bench_function("expm_n16", |b| b.iter(|| expm(&a, 0.01, &tol).unwrap()));
}

fn bench_sip(c: &mut Criterion) {
    let tol = Tolerances::default();
    let space = Space::Grid(GridSpace::nodes(3.0, 256));
    let mut sampler = Sampler::new(DEFAULT_SEED);
    let f = sampler.complex_vector(space.dim());
    let g = sampler.complex_vector(space.dim());
    c.bench_function("sip_p3_n257", |b| b.iter(|| space.sip(&f, &g, &tol)));
}

fn bench_margin(c: &mut Criterion) {
    let tol = Tolerances::default();
    let a = heat_generator(32);
    let space = Space::Grid(GridSpace::nodes(2.0, 32));
    let mut sampler = Sampler::new(DEFAULT_SEED);
    c.bench_function("margin_p2_n33", |b| {
        b.iter(|| {
            semigen_core::dissipativity::dissipativity_margin(
                &a,
                &space,
                0,
                &mut sampler,
                &tol,
            )
        })
    });
}

criterion_group!(
    benches,
    bench_assembly,
    bench_lu_solve,
    bench_expm,
    bench_sip,
    bench_margin
);
criterion_main!(benches);

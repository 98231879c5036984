use criterion::{black_box, criterion_group, criterion_main, Criterion};
use rabi_lab::eigen::{lowest_eigenpairs, SolverOptions};
use rabi_lab::hamiltonians::{build_effective, build_full};
use rabi_lab::hilbert::Factor;
use rabi_lab::tomography::{reduce, wigner, GridSpec};
use rabi_lab::{ModelParams, Truncation};

fn params() -> ModelParams {
    ModelParams::from_dimensionless(40.0, 5.0, 0.5, 0.95).unwrap()
}

fn operators(c: &mut Criterion) {
    let p = params();
    c.bench_function("build_full_12x90", |b| {
        b.iter(|| build_full(black_box(&p), &Truncation::full(12, 90)).unwrap())
    });
    c.bench_function("build_effective_200", |b| {
        b.iter(|| build_effective(black_box(&p), &Truncation::effective(200)).unwrap())
    });
}

fn ground_states(c: &mut Criterion) {
    let p = params();
    let opts = SolverOptions::default();
    let eff = build_effective(&p, &Truncation::effective(200)).unwrap();
    c.bench_function("ground_effective_200", |b| {
        b.iter(|| lowest_eigenpairs(black_box(&eff), 2, &opts).unwrap())
    });
    let full = build_full(&p, &Truncation::full(8, 60)).unwrap();
    let mut g = c.benchmark_group("slow");
    g.sample_size(10);
    g.bench_function("ground_full_8x60", |b| {
        b.iter(|| lowest_eigenpairs(black_box(&full), 2, &opts).unwrap())
    });
    g.finish();
}

fn tomography(c: &mut Criterion) {
    let p = params();
    let t = Truncation::effective(60);
    let h = build_effective(&p, &t).unwrap();
    let s = lowest_eigenpairs(&h, 1, &SolverOptions::default()).unwrap();
    let rho = reduce(&s.eigenvectors[0], &t.basis(), Factor::ModeB).unwrap();
    let grid = GridSpec::square(4.0, 41);
    c.bench_function("wigner_60_levels_41x41", |b| b.iter(|| wigner(black_box(&rho), &grid).unwrap()));
}

criterion_group!(benches, operators, ground_states, tomography);
criterion_main!(benches);

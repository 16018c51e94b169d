use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use tns_core::{
    forward_transform, genuine3d_cut, inverse_transform, lq_norm, nonlinear_term,
    random_divfree_field, trilinear_b, ForcingSpec, GridSpec, Integrator, SolverState,
};

fn transforms(c: &mut Criterion) {
    let mut group = c.benchmark_group("transform");
    for m in [16, 32, 64] {
        let u = random_divfree_field(GridSpec::new(m, 0.1).unwrap(), 5.0 / 3.0, 1);
        let p = inverse_transform(&u).unwrap();
        group.bench_with_input(BenchmarkId::new("inverse", m), &u, |b, u| {
            b.iter(|| inverse_transform(black_box(u)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("forward", m), &p, |b, p| {
            b.iter(|| forward_transform(black_box(p)))
        });
    }
    group.finish();
}

fn solver(c: &mut Criterion) {
    let g = GridSpec::new(32, 0.01).unwrap();
    let u = random_divfree_field(g, 5.0 / 3.0, 2);
    c.bench_function("nonlinear_term/32", |b| b.iter(|| nonlinear_term(black_box(&u))));
    let integ = Integrator::new(g, 1e-3, &ForcingSpec::Zero).unwrap();
    let state = SolverState::new(u.clone(), 0.0).unwrap();
    c.bench_function("step/32", |b| b.iter(|| integ.step(black_box(&state)).unwrap()));
    c.bench_function("trilinear_b/32", |b| {
        b.iter(|| trilinear_b(black_box(&u), &u, &u).unwrap())
    });
}

fn norms(c: &mut Criterion) {
    let mut group = c.benchmark_group("lq_norm");
    let u = random_divfree_field(GridSpec::new(64, 0.1).unwrap(), 5.0 / 3.0, 3);
    let w = genuine3d_cut(&u, 4);
    for q in [3.0, 4.0, 5.5, f64::INFINITY] {
        group.bench_with_input(BenchmarkId::new("full", q), &q, |b, &q| {
            b.iter(|| lq_norm(black_box(&u), q).unwrap())
        });
        // the cut field exercises the pruned transforms
        group.bench_with_input(BenchmarkId::new("genuine3d_cut_4", q), &q, |b, &q| {
            b.iter(|| lq_norm(black_box(&w), q).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, transforms, solver, norms);
criterion_main!(benches);

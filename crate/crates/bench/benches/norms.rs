use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fblab_core::{
    fbl_norm_k, g_phi, maximal_majorant, parse_expr, sampling, Budget, HomFn, PhiVector, Space,
};

const JOIN3: &str = "join(abs(delta [1,0,0]),abs(delta [0,1,0]),abs(delta [0,0,1]))";

fn summing_constraint(c: &mut Criterion) {
    let mut group = c.benchmark_group("summing_constraint");
    for (name, space) in [
        ("l1:4", Space::l1(4).unwrap()),
        ("l2:4", Space::l2(4).unwrap()),
        ("lp:1.5:4", Space::lp(4, 1.5).unwrap()),
    ] {
        let mut r = sampling::rng(1);
        let tuple: Vec<Vec<f64>> = (0..6).map(|_| sampling::gaussian_vec(&mut r, 4)).collect();
        group.bench_function(name, |b| {
            b.iter(|| space.summing_constraint(black_box(&tuple), 1.0, 16).unwrap())
        });
    }
    group.finish();
}

fn fbl_norm(c: &mut Criterion) {
    let mut group = c.benchmark_group("fbl_norm_k");
    group.sample_size(10);
    let budget = Budget::default().with_starts(8);
    for (name, space) in [("l1:3", Space::l1(3).unwrap()), ("l2:3", Space::l2(3).unwrap())] {
        let f = parse_expr(JOIN3, Some(&space)).unwrap();
        for k in [1, 2, 3] {
            group.bench_with_input(BenchmarkId::new(name, k), &k, |b, &k| {
                b.iter(|| fbl_norm_k(&space, &f, 1.0, k, &budget).unwrap().value)
            });
        }
    }
    group.finish();
}

fn majorant(c: &mut Criterion) {
    let mut group = c.benchmark_group("maximal_majorant");
    group.sample_size(10);
    let space = Space::l1(3).unwrap();
    let f = parse_expr(JOIN3, Some(&space)).unwrap();
    for samples in [512, 2048] {
        group.bench_with_input(BenchmarkId::from_parameter(samples), &samples, |b, &n| {
            b.iter(|| maximal_majorant(&space, &f, 1.0, n, 1e-9, 0).unwrap().1.sum)
        });
    }
    group.finish();
}

fn gphi_eval(c: &mut Criterion) {
    let phi = PhiVector::finite((1..=64).map(|a| 1.0 / a as f64).collect(), 2.0).unwrap();
    let g = g_phi(&phi).unwrap();
    let x: Vec<f64> = (0..64).map(|i| (i as f64 * 0.37).sin()).collect();
    c.bench_function("g_phi_value_64", |b| b.iter(|| g.value(black_box(&x))));
}

criterion_group!(benches, summing_constraint, fbl_norm, majorant, gphi_eval);
criterion_main!(benches);

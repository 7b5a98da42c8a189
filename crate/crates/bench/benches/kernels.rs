use criterion::{black_box, criterion_group, criterion_main, Criterion};
use kslab_core::config::{perturbed, polygon, solve_newton, NewtonOptions};
use kslab_core::epsilon::{constants_from_ab, integrate_simplified};
use kslab_core::inner::{FundamentalSystem, InnerGrid};
use kslab_core::outer::{solve_level, OuterDomain};

fn configurations(c: &mut Criterion) {
    let opts = NewtonOptions::default();
    for n in [5, 7] {
        let seed = perturbed(&polygon(n).unwrap(), 0.01);
        c.bench_function(&format!("newton {n}-gon"), |b| {
            b.iter(|| solve_newton(black_box(&seed), &opts).unwrap())
        });
    }
}

fn inner(c: &mut Criterion) {
    let mut g = c.benchmark_group("inner");
    g.sample_size(10);
    g.bench_function("fundamental system L=2", |b| {
        b.iter(|| FundamentalSystem::new(black_box(2), InnerGrid::default()).unwrap())
    });
    g.finish();
}

fn outer(c: &mut Criterion) {
    let mut g = c.benchmark_group("outer");
    g.sample_size(10);
    let domain = OuterDomain::new(0.05, 20.0, 1).unwrap();
    g.bench_function("coarsest level", |b| {
        b.iter(|| solve_level(black_box(domain), [8.0, 8.0]).unwrap())
    });
    g.finish();
}

fn width(c: &mut Criterion) {
    let consts = constants_from_ab(-0.95, 0.0).unwrap();
    let mut g = c.benchmark_group("epsilon");
    g.sample_size(10);
    g.bench_function("simplified to 1e5", |b| {
        b.iter(|| integrate_simplified(black_box(&consts), 0.05, 10.0, 1e5).unwrap())
    });
    g.finish();
}

criterion_group!(benches, configurations, inner, outer, width);
criterion_main!(benches);

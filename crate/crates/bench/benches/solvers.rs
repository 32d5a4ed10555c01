use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use epinet_core::abm::{simulate, AbmConfig, Strategy};
use epinet_core::equilibrium::{best_response, integrate_best_response, solve_ce, solve_hetero_ce};
use epinet_core::protection::optimal_eta_strategic;
use epinet_core::{make_utility, Family, ModelParams, PopulationMix, StepControl};

fn equilibria(c: &mut Criterion) {
    let p = ModelParams::default();
    let u = make_utility(Family::Sqrt, &[], 0.1).unwrap();
    c.bench_function("best_response", |b| b.iter(|| best_response(black_box(0.3), &u, &p).unwrap()));
    c.bench_function("solve_ce", |b| b.iter(|| solve_ce(black_box(&u), &p).unwrap()));
    let mix = PopulationMix::new(vec![0.2, 0.3, 0.5], vec![0.2, 0.3, 0.4]).unwrap();
    c.bench_function("solve_hetero_ce/3_types", |b| b.iter(|| solve_hetero_ce(&u, black_box(&mix), &p).unwrap()));
    c.bench_function("integrate_best_response/100", |b| {
        b.iter(|| integrate_best_response(black_box(0.01), &u, &p, 100.0, &StepControl::default()).unwrap())
    });
}

fn protection(c: &mut Criterion) {
    let p = ModelParams::default();
    let u = make_utility(Family::Cubic, &[1.0, 1e-5], 0.1).unwrap();
    c.bench_function("optimal_eta_strategic", |b| b.iter(|| optimal_eta_strategic(black_box(0.9), &u, &p).unwrap()));
}

fn simulation(c: &mut Criterion) {
    let cfg = AbmConfig { horizon: 20.0, ..AbmConfig::new(1000, ModelParams::default(), Strategy::Fixed { a: 6.0 }) };
    let mut group = c.benchmark_group("abm");
    group.sample_size(20);
    group.bench_function("fixed/1000_agents", |b| b.iter(|| simulate(black_box(&cfg)).unwrap()));
    group.finish();
}

criterion_group!(benches, equilibria, protection, simulation);
criterion_main!(benches);

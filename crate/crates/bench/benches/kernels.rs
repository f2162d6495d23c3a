use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use mane_bench::*;
use mane_core::ergopt::cycles::{karp_mean, min_mean_cycle};
use mane_core::orbitlab::{palga_pipeline, PalgaOptions, SturmianAubry};
use mane_core::sft::{entropy, shortest_periodic_orbit};
use mane_core::shadowing::{shadow_specification, HyperbolicModel, SpecificationNumeric};
use mane_core::weakkam::{critical_value, lax_oleinik};
use mane_core::Sft;

fn karp(c: &mut Criterion) {
    let mut g = c.benchmark_group("karp");
    for n in [64, 256, 1024] {
        let edges = random_digraph(7, n, 4);
        g.bench_with_input(BenchmarkId::from_parameter(n), &edges, |b, e| b.iter(|| karp_mean(n, black_box(e))));
    }
    g.finish();
    let f = float_potential(3, 6);
    c.bench_function("min_mean_cycle/window2_m6", |b| b.iter(|| min_mean_cycle(black_box(&f)).unwrap()));
}

fn sft(c: &mut Criterion) {
    let s = Sft::random(&mut rng(11), 10, 0.3);
    c.bench_function("sft/entropy_m10", |b| b.iter(|| entropy(black_box(&s))));
    c.bench_function("sft/shortest_orbit_m10", |b| b.iter(|| shortest_periodic_orbit(black_box(&s))));
}

fn weakkam(c: &mut Criterion) {
    let g = pendulum_graph(200);
    c.bench_function("weakkam/critical_value_n200", |b| b.iter(|| critical_value(black_box(&g)).unwrap()));
    let cv = critical_value(&g).unwrap();
    c.bench_function("weakkam/lax_oleinik_n200", |b| b.iter(|| lax_oleinik(black_box(&g), cv.c, cv.base).unwrap()));
}

fn shadowing(c: &mut Criterion) {
    let m = HyperbolicModel::cat_map();
    let z = pseudo_orbit(5, 200, 1e-3);
    let spec = SpecificationNumeric::from_pseudo_orbit(&m, &z, true).unwrap();
    c.bench_function("shadowing/periodic_200", |b| b.iter(|| shadow_specification(&m, black_box(&spec)).unwrap()));
}

fn palga(c: &mut Criterion) {
    let m = HyperbolicModel::cat_map();
    let a = SturmianAubry::golden();
    let sys = a.sample(4000);
    let opts = PalgaOptions { horizon: 8, ..Default::default() };
    let mut g = c.benchmark_group("palga");
    g.sample_size(10);
    g.bench_function("testbed_T8", |b| b.iter(|| palga_pipeline(&m, &sys, &a, black_box(&opts)).unwrap()));
    g.finish();
}

criterion_group!(benches, karp, sft, weakkam, shadowing, palga);
criterion_main!(benches);

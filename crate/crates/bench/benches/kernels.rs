use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use mapflux_core::lamperti::{image_grid, map_to_ssmp, tau_table};
use mapflux_core::models::simulate_map;
use mapflux_core::oracle::enumerate_discrete_map;
use mapflux_core::{ModelSpec, OracleSpec, RootSystem, SimulationConfig};

fn euler(c: &mut Criterion) {
    let bessel = SimulationConfig::new(ModelSpec::FreeBessel2D, 1e-4, 1.0, 1, 7);
    let th = bessel.model.default_theta0();
    c.bench_function("bessel map 1e4 steps", |b| {
        b.iter(|| simulate_map(black_box(&bessel), th, 0).unwrap())
    });
    let a1 = SimulationConfig::new(ModelSpec::RadialDunkl { root_system: RootSystem::A1, k: 0.5 }, 1e-4, 1.0, 1, 7);
    let th = a1.model.default_theta0();
    c.bench_function("dunkl a1 map 1e4 steps", |b| {
        b.iter(|| simulate_map(black_box(&a1), th, 0).unwrap())
    });
}

fn enumeration(c: &mut Criterion) {
    let spec = OracleSpec::fair_walk(16);
    c.bench_function("oracle enumeration n=16", |b| {
        b.iter(|| enumerate_discrete_map(black_box(&spec)).unwrap())
    });
}

fn lamperti(c: &mut Criterion) {
    let cfg = SimulationConfig::new(ModelSpec::FreeBessel2D, 1e-4, 1.0, 1, 7);
    let path = simulate_map(&cfg, cfg.model.default_theta0(), 0).unwrap().path;
    c.bench_function("map to ssmp 1e4 points", |b| {
        b.iter(|| {
            let grid = image_grid(&tau_table(&path, 2.0).unwrap()).unwrap();
            map_to_ssmp(black_box(&path), 2.0, &grid).unwrap()
        })
    });
}

criterion_group!(benches, euler, enumeration, lamperti);
criterion_main!(benches);

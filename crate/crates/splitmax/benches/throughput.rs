//! Throughput benchmarks for the hot paths. Bench names carry the active
//! execution mode, so running `cargo bench` (rayon) and
//! `cargo bench --no-default-features` (sequential) produces directly
//! comparable entries:
//!
//!   estimate_spread/rayon  vs  estimate_spread/sequential
//!
//! criterion stores both under target/criterion for side-by-side reports.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use splitmax::combined::EvalMode;
use splitmax::data::{generate_synthetic, SyntheticConfig, UserId};
use splitmax::diagnostics::{brute_force_optimum, measure_gamma};
use splitmax::diffusion::{estimate_spread, EdgeProbabilityModel};
use splitmax::optimize::{tpg, Prepared};

#[cfg(feature = "parallel")]
const MODE: &str = "rayon";
#[cfg(not(feature = "parallel"))]
const MODE: &str = "sequential";

fn spread_estimation(c: &mut Criterion) {
    let instance = generate_synthetic(&SyntheticConfig {
        n_users: 300,
        n_billboards: 4,
        n_edges: 1500,
        prob_model: EdgeProbabilityModel::WeightedCascade { literal_out: false },
        rng_seed: 7,
        ..Default::default()
    });
    let seeds: Vec<UserId> = instance.graph.nodes().iter().copied().take(10).collect();
    c.bench_with_input(
        BenchmarkId::new("estimate_spread", MODE),
        &instance,
        |b, inst| {
            b.iter(|| {
                let est = estimate_spread(&inst.graph, black_box(&seeds), 2000, 42).unwrap();
                black_box(est.mean)
            })
        },
    );
}

fn exhaustive_optimum(c: &mut Criterion) {
    let instance = generate_synthetic(&SyntheticConfig {
        n_users: 7,
        n_billboards: 2,
        n_edges: 10,
        delta_slot: 21_600, // 4 slots per billboard: 8 slots + 7 seeds
        budget: 60.0,
        prob_model: EdgeProbabilityModel::Uniform { pc: 0.4 },
        seed_cost_scale: 25.0,
        rng_seed: 3,
        ..Default::default()
    });
    c.bench_with_input(
        BenchmarkId::new("brute_force_optimum", MODE),
        &instance,
        |b, inst| {
            b.iter(|| {
                let prep = Prepared::new(inst);
                black_box(brute_force_optimum(&prep).unwrap().phi_opt)
            })
        },
    );
}

fn gamma_measurement(c: &mut Criterion) {
    let instance = generate_synthetic(&SyntheticConfig {
        n_users: 5,
        n_billboards: 2,
        n_edges: 9,
        delta_slot: 28_800, // 3 slots per billboard: 6 slots + 5 seeds
        budget: 50.0,
        prob_model: EdgeProbabilityModel::Uniform { pc: 0.5 },
        seed_cost_scale: 25.0,
        rng_seed: 5,
        ..Default::default()
    });
    c.bench_with_input(
        BenchmarkId::new("measure_gamma", MODE),
        &instance,
        |b, inst| {
            b.iter(|| {
                let prep = Prepared::new(inst);
                black_box(measure_gamma(&prep).unwrap().0)
            })
        },
    );
}

fn optimizer_run(c: &mut Criterion) {
    let instance = generate_synthetic(&SyntheticConfig {
        n_users: 60,
        n_billboards: 4,
        n_edges: 250,
        budget: 400.0,
        prob_model: EdgeProbabilityModel::Uniform { pc: 0.1 },
        seed_cost_scale: 80.0,
        rng_seed: 11,
        ..Default::default()
    });
    let mode = EvalMode::MonteCarlo {
        sims: 200,
        rng_seed: 9,
    };
    c.bench_with_input(BenchmarkId::new("tpg_monte_carlo", MODE), &instance, |b, inst| {
        b.iter(|| {
            let prep = Prepared::new(inst);
            black_box(tpg(&prep, mode).unwrap().solution.phi.phi)
        })
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = spread_estimation, exhaustive_optimum, gamma_measurement, optimizer_run
}
criterion_main!(benches);

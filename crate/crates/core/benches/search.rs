use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use testroll::bernoulli::{BernoulliState, DesignContext};
use testroll::exec::Parallelism;
use testroll::montecarlo::{simulate_error_prob, SimConfig, SimModel};
use testroll::search::{worst_case_regret, worst_case_wmb, GridSpec, SearchOptions};

const MODES: [(&str, Parallelism); 2] = [
    ("sequential", Parallelism::Sequential),
    ("parallel", Parallelism::Parallel),
];

fn wmb_step(c: &mut Criterion) {
    let mut g = c.benchmark_group("worst_case_wmb");
    g.sample_size(10);
    let grid = GridSpec::separated(0.01).unwrap();
    let ctx = DesignContext::new(2000, 600).unwrap();
    for (name, parallelism) in MODES {
        for prune in [true, false] {
            let opts = SearchOptions {
                parallelism,
                prune,
                ..Default::default()
            };
            let id = BenchmarkId::new(name, if prune { "pruned" } else { "full" });
            g.bench_with_input(id, &opts, |b, o| {
                b.iter(|| worst_case_wmb(black_box(&ctx), &grid, o).unwrap())
            });
        }
    }
    g.finish();
}

fn minimax_step(c: &mut Criterion) {
    let mut g = c.benchmark_group("worst_case_regret");
    g.sample_size(10);
    let grid = GridSpec::full(0.01).unwrap();
    let ctx = DesignContext::new(1000, 50).unwrap();
    for (name, parallelism) in MODES {
        let opts = SearchOptions {
            parallelism,
            ..Default::default()
        };
        g.bench_function(name, |b| {
            b.iter(|| worst_case_regret(black_box(&ctx), &grid, &opts).unwrap())
        });
    }
    g.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let mut g = c.benchmark_group("simulate_error_prob");
    g.sample_size(10);
    for (name, parallelism) in MODES {
        let cfg = SimConfig {
            replications: 50_000,
            seed: 7,
            model: SimModel::Bernoulli(BernoulliState::new(0.52, 0.5).unwrap()),
            ctx: DesignContext::new(1000, 300).unwrap(),
            parallelism,
        };
        g.bench_function(name, |b| {
            b.iter(|| simulate_error_prob(black_box(&cfg)).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, wmb_step, minimax_step, monte_carlo);
criterion_main!(benches);

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use jumpvar_core::asymptotics::{sigma_star, McConfig, WeightFunction};
use jumpvar_core::preavg::{truncated_preavg_bv, PreAvgConfig};
use jumpvar_core::simlab::{simulate_map, Model, NoiseSpec, SimSpec};
use jumpvar_core::Exec;

const STRATEGIES: [Exec; 2] = [Exec::Sequential, Exec::Parallel];

fn table2_cell(c: &mut Criterion) {
    let spec = SimSpec::new(Model::bmj(), 10_000, 1).with_noise(NoiseSpec::iid(0.5));
    let cfg = PreAvgConfig::default();
    let mut group = c.benchmark_group("bmj_paths_bv_tau");
    group.sample_size(10);
    for exec in STRATEGIES {
        group.bench_with_input(BenchmarkId::from_parameter(exec), &exec, |b, &exec| {
            b.iter(|| {
                simulate_map(&spec, 32, exec, |_, p| {
                    truncated_preavg_bv(&p.observed, &cfg).map(|t| t.bv_star_tau)
                })
                .map(black_box)
            })
        });
    }
    group.finish();
}

fn sigma_star_nodes(c: &mut Criterion) {
    let g = WeightFunction::triangular();
    let mc = McConfig {
        draws: 5_000,
        seed: 3,
    };
    let mut group = c.benchmark_group("sigma_star_time_varying");
    group.sample_size(10);
    for exec in STRATEGIES {
        group.bench_with_input(BenchmarkId::from_parameter(exec), &exec, |b, &exec| {
            b.iter(|| black_box(sigma_star(|s| 0.03 + 0.02 * s, 1e-7, 1.0, &g, &mc, exec)))
        });
    }
    group.finish();
}

criterion_group!(benches, table2_cell, sigma_star_nodes);
criterion_main!(benches);

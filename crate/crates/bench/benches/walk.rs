use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use srw_bench::synthetic_instances;
use srw_core::trainer::{objective, TrainConfig};
use srw_core::walker::{build_transition, pagerank, walk};
use srw_core::{Model, PowerConfig, StrengthFamily};

fn stationary(c: &mut Criterion) {
    let mut group = c.benchmark_group("walk");
    for nodes in [1_000, 5_000] {
        let inst = &synthetic_instances(nodes, 1)[0];
        let model = Model::from_params(
            StrengthFamily::Exponential,
            Default::default(),
            2,
            vec![1.0, -1.0],
        )
        .unwrap();
        let view = build_transition(inst, &model, 0.2).unwrap();
        group.bench_with_input(BenchmarkId::new("pagerank", nodes), &view, |b, view| {
            b.iter(|| pagerank(black_box(view), PowerConfig::default()).unwrap())
        });
        group.bench_with_input(
            BenchmarkId::new("pagerank_and_derivatives", nodes),
            &view,
            |b, view| b.iter(|| walk(black_box(view), None, PowerConfig::default()).unwrap()),
        );
    }
    group.finish();
}

fn training_objective(c: &mut Criterion) {
    let data = synthetic_instances(1_000, 8);
    let config = TrainConfig {
        alpha: 0.2,
        family: StrengthFamily::Exponential,
        ..TrainConfig::default()
    };
    let model =
        Model::from_params(config.family, config.edge_type_mode, 2, vec![0.5, -0.5]).unwrap();
    c.bench_function("objective_8x1000", |b| {
        b.iter(|| objective(black_box(&model), &data, &config).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = stationary, training_objective
}
criterion_main!(benches);

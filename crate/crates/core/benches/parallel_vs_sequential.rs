//! Parallel versus sequential execution of the data-parallel regions:
//! minimax aggregation, the learning-rate search and independent trials.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use curriculum_core::aggregation::{minmax_entropy, MinmaxConfig};
use curriculum_core::curriculum::{make_random_bins, LrGrid, TrainSettings, Trainer};
use curriculum_core::data::random_split;
use curriculum_core::difficulty::Task;
use curriculum_core::experiment::{prepare_task, ExperimentData, PreparedTask};
use curriculum_core::nn::NetworkConfig;
use curriculum_core::par::Execution;
use curriculum_core::synth::{simulate_categorical, SimConfig, Simulation};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn simulation(n_items: usize) -> Simulation {
    let mut cfg = SimConfig::categorical(n_items, 20, 5, 3).unwrap();
    cfg.feature_dim = 32;
    cfg.low_ability_workers = 2;
    simulate_categorical(&cfg).unwrap()
}

fn prepared(sim: &Simulation) -> PreparedTask {
    let split = random_split(sim.annotations.item_ids(), (0.7, 0.1, 0.2), 1).unwrap();
    prepare_task(
        Task::Multiclass,
        ExperimentData {
            annotations: &sim.annotations,
            features: &sim.features,
            split: &split,
        },
    )
    .unwrap()
}

fn trainer(task: &PreparedTask, exec: Execution) -> Trainer<'_> {
    let network = NetworkConfig::classifier(task.train.features.ncols(), vec![64, 64], 5, 0);
    let mut settings = TrainSettings::new(network);
    settings.exec = exec;
    Trainer::new(&task.train, &task.dev, &task.test, settings).unwrap()
}

fn bench_minmax(c: &mut Criterion) {
    let sim = simulation(400);
    let mut group = c.benchmark_group("minmax_entropy");
    group.sample_size(10);
    for (name, exec) in MODES {
        let cfg = MinmaxConfig {
            outer_iters: 10,
            exec,
            ..MinmaxConfig::default()
        };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| minmax_entropy(&sim.annotations, cfg).unwrap())
        });
    }
    group.finish();
}

fn bench_lr_search(c: &mut Criterion) {
    let sim = simulation(600);
    let task = prepared(&sim);
    let bins = make_random_bins(&task.train.ids, 3, 9).unwrap();
    let grid = LrGrid::new(vec![0.01, 0.005, 0.001, 0.0005]).unwrap();
    let mut group = c.benchmark_group("greedy_lr_search");
    group.sample_size(10);
    for (name, exec) in MODES {
        let t = trainer(&task, exec);
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| t.greedy_lr_search(&bins, &grid, 3, 0).unwrap())
        });
    }
    group.finish();
}

fn bench_trials(c: &mut Criterion) {
    let sim = simulation(600);
    let task = prepared(&sim);
    let seeds: Vec<u64> = (0..4).collect();
    let mut group = c.benchmark_group("plain_trials");
    group.sample_size(10);
    for (name, exec) in MODES {
        let t = trainer(&task, exec);
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| t.train_plain(5, 0.001, &seeds).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_minmax, bench_lr_search, bench_trials);
criterion_main!(benches);

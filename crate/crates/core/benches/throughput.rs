//! Throughput of the data-parallel stages against a one-thread run.
//!
//! With default features each parallel group is measured at `jobs=1` and with
//! the full pool. `cargo bench --no-default-features` gives the sequential
//! build for the same groups.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rankplan::features::{FeatureKind, FeatureLayout};
use rankplan::generators::{generate_instance, Family, GenSpec};
use rankplan::ground::{ground, GroundTask};
use rankplan::harness::evaluate_on;
use rankplan::heuristic::FfHeuristic;
use rankplan::learn::{loocv_select, Learner};
use rankplan::par;
use rankplan::pipeline::{build_training_data, PipelineConfig};
use rankplan::search::{Budget, FfEvaluator};

fn delivery(locations: usize, packages: usize, trucks: usize, seed: u64) -> GroundTask {
    let inst = generate_instance(&GenSpec {
        family: Family::Delivery {
            locations,
            packages,
            trucks,
            extra_roads: locations / 2,
        },
        seed,
    })
    .unwrap();
    ground(&inst.domain, &inst.problem).unwrap()
}

fn training_problems() -> Vec<(String, GroundTask)> {
    (0..10)
        .map(|i| (format!("t{i}"), delivery(4 + i % 3, 2 + i % 2, 1, i as u64)))
        .collect()
}

fn job_counts() -> Vec<usize> {
    if par::is_parallel() {
        vec![1, 0]
    } else {
        vec![1]
    }
}

fn label(jobs: usize) -> String {
    match (par::is_parallel(), jobs) {
        (false, _) => "sequential-build".into(),
        (true, 1) => "jobs=1".into(),
        (true, _) => "pool".into(),
    }
}

fn ff_evaluation(c: &mut Criterion) {
    let task = delivery(12, 8, 2, 7);
    let mut ff = FfHeuristic::new(&task);
    let layout = FeatureLayout::new(FeatureKind::Pairwise, task.schemas.clone());
    let dag = ff.evaluate(&task.init).dag.unwrap();
    c.bench_function("ff-evaluate", |b| {
        b.iter(|| ff.evaluate(black_box(&task.init)))
    });
    c.bench_function("pairwise-features", |b| {
        b.iter(|| layout.extract(black_box(&dag)).unwrap())
    });
}

fn pipeline(c: &mut Criterion) {
    let problems = training_problems();
    let config = PipelineConfig::default();
    let mut group = c.benchmark_group("training-data");
    group.sample_size(10);
    for jobs in job_counts() {
        group.bench_with_input(
            BenchmarkId::from_parameter(label(jobs)),
            &jobs,
            |b, &jobs| {
                b.iter(|| {
                    par::with_jobs(jobs, || {
                        build_training_data(&problems, FeatureKind::Pairwise, &config).unwrap()
                    })
                })
            },
        );
    }
    group.finish();
}

fn loocv(c: &mut Criterion) {
    let data = build_training_data(
        &training_problems(),
        FeatureKind::Pairwise,
        &PipelineConfig::default(),
    )
    .unwrap();
    let grid = [1e-2, 1e-1, 1.0, 10.0, 100.0];
    let mut group = c.benchmark_group("loocv-ranksvm");
    group.sample_size(10);
    for jobs in job_counts() {
        group.bench_with_input(
            BenchmarkId::from_parameter(label(jobs)),
            &jobs,
            |b, &jobs| {
                b.iter(|| {
                    par::with_jobs(jobs, || {
                        loocv_select(&data.set, Learner::RankSvm { nonneg: false }, &grid).unwrap()
                    })
                })
            },
        );
    }
    group.finish();
}

fn search_fanout(c: &mut Criterion) {
    let tasks: Vec<GroundTask> = (0..16)
        .map(|i| delivery(8 + i % 4, 4 + i % 3, 2, 100 + i as u64))
        .collect();
    let mut group = c.benchmark_group("search-fanout");
    group.sample_size(10);
    for jobs in job_counts() {
        group.bench_with_input(
            BenchmarkId::from_parameter(label(jobs)),
            &jobs,
            |b, &jobs| {
                b.iter(|| {
                    par::with_jobs(jobs, || {
                        evaluate_on(&tasks, Budget::expansions(50_000), |t| {
                            Box::new(FfEvaluator::new(t))
                        })
                    })
                })
            },
        );
    }
    group.finish();
}

criterion_group!(benches, ff_evaluation, pipeline, loocv, search_fanout);
criterion_main!(benches);

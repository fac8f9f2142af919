use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use urdp_bench::{bowl, canonical_sample, mixed_batch, unit_design};
use urdp_core::acquisition::{maximize_acquisition, AcquisitionContext, AcquisitionMode, MaximizerConfig};
use urdp_core::gp::{FitConfig, GpModel};
use urdp_core::similarity::{text_similarity, SimilarityEngine};
use urdp_core::uabo::{run_inner_loop, InnerLoopConfig, InnerLoopTask};
use urdp_core::uncertainty::UncertaintyReport;
use urdp_core::{SyntheticEvaluator, SyntheticPreset};

fn gp(c: &mut Criterion) {
    let mut g = c.benchmark_group("gp");
    for n in [10, 20, 40] {
        let x = unit_design(n, 6, 1);
        let y = bowl(&x);
        let u = [0.2, 0.4, 0.6, 0.8, 1.0, 0.5];
        g.bench_with_input(BenchmarkId::new("fit", n), &n, |b, _| b.iter(|| GpModel::fit(black_box(&x), black_box(&y), &u, 0.6, &FitConfig::default()).unwrap()));
        let model = GpModel::fit(&x, &y, &u, 0.6, &FitConfig::default()).unwrap();
        let q = vec![0.5; 6];
        g.bench_with_input(BenchmarkId::new("posterior", n), &n, |b, _| b.iter(|| model.posterior(black_box(&q))));
    }
    g.finish();
}

fn acquisition(c: &mut Criterion) {
    let x = unit_design(20, 6, 2);
    let y = bowl(&x);
    let u = vec![0.3; 6];
    let model = GpModel::fit(&x, &y, &u, 0.3, &FitConfig::default()).unwrap();
    let best = (0..y.len()).max_by(|&a, &b| y[a].total_cmp(&y[b])).unwrap();
    let mut g = c.benchmark_group("maximize_acquisition");
    for mode in [AcquisitionMode::Ei, AcquisitionMode::Uei] {
        let ctx = AcquisitionContext { model: &model, incumbent_y: y[best], incumbent_theta: x[best].clone(), component_u: u.clone(), mode };
        g.bench_function(format!("{mode:?}"), |b| b.iter(|| maximize_acquisition(&ctx, &MaximizerConfig::default(), black_box(3))));
    }
    g.finish();
}

fn similarity(c: &mut Criterion) {
    let batch = mixed_batch(16);
    let (a, b) = (&batch[0].code_text, &batch[1].code_text);
    c.bench_function("text_similarity/function_pair", |bch| bch.iter(|| text_similarity(black_box(a), black_box(b)).unwrap()));
    let engine = SimilarityEngine::offline();
    c.bench_function("uncertainty_report/k16", |bch| bch.iter(|| UncertaintyReport::build(black_box(&batch), 0.95, &engine).unwrap()));
}

fn inner_loop(c: &mut Criterion) {
    let ev = SyntheticEvaluator::preset(SyntheticPreset::D4);
    let sample = canonical_sample(SyntheticPreset::D4);
    let d = sample.hyperparameters.len();
    let mut g = c.benchmark_group("inner_loop");
    g.sample_size(10);
    g.bench_function("synthetic-d4/budget40", |b| {
        b.iter(|| {
            let task = InnerLoopTask { sample: &sample, dim_u: vec![0.5; d], sample_u: 0.5, budget: 40, iteration: 1, run_id: "bench".into() };
            run_inner_loop(&task, &ev, &InnerLoopConfig::default()).unwrap()
        })
    });
    g.finish();
}

criterion_group!(benches, gp, acquisition, similarity, inner_loop);
criterion_main!(benches);

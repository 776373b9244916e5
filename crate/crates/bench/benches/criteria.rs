use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use robust_doe::model::{enumerate_submodels, weight_table_enumerated, MaximalModel, PriorSpec};
use robust_doe::{
    cpw_search, gwlp_up_to, projection_average_exact, projection_average_tilde, weight_table_exchangeable,
    HarmonicPooling, SearchConfig,
};
use robust_doe_bench::{approx_weights, design, exact_weights, nonregular_suite};

fn exact_vs_approx(c: &mut Criterion) {
    let suite = nonregular_suite();
    let mut group = c.benchmark_group("suite_average");
    group.sample_size(10);
    for k in 2..=5 {
        let exact = exact_weights(k, 14);
        let approx = approx_weights(k, 14, &PriorSpec::Equal);
        group.bench_with_input(BenchmarkId::new("exact", k), &k, |b, &k| {
            b.iter(|| {
                for d in &suite {
                    black_box(projection_average_exact(d, k, &exact, 0.5, HarmonicPooling::Pooled).unwrap());
                }
            })
        });
        group.bench_with_input(BenchmarkId::new("approx", k), &k, |b, &k| {
            b.iter(|| {
                for d in &suite {
                    black_box(projection_average_tilde(d, k, &approx, 0.5).unwrap());
                }
            })
        });
    }
    group.finish();
}

fn weights(c: &mut Criterion) {
    let prior = PriorSpec::hierarchical(0.5, 0.25);
    let mut group = c.benchmark_group("weights");
    for k in [4, 5] {
        let max = MaximalModel::second_order(k);
        group.bench_with_input(BenchmarkId::new("enumerated", k), &max, |b, max| {
            b.iter(|| {
                let models = enumerate_submodels(max, 14).unwrap();
                black_box(weight_table_enumerated(&models, &prior, max, 14).unwrap())
            })
        });
    }
    for k in [5, 12, 24] {
        let max = MaximalModel::second_order(k);
        group.bench_with_input(BenchmarkId::new("exchangeable", k), &max, |b, max| {
            b.iter(|| black_box(weight_table_exchangeable(max, &prior, 25).unwrap()))
        });
    }
    group.finish();
}

fn wordlengths(c: &mut Criterion) {
    let mut group = c.benchmark_group("gwlp_to_4");
    for name in ["N_10", "N_18", "N_25"] {
        let d = design(name);
        group.bench_function(name, |b| b.iter(|| black_box(gwlp_up_to(&d, 4))));
    }
    group.finish();
}

fn search(c: &mut Criterion) {
    let mut group = c.benchmark_group("search");
    group.sample_size(10);
    for (n, m) in [(6, 5), (10, 9)] {
        let cfg = SearchConfig { n_runs: n, n_factors: m, k: 5, restarts: 4, seed: 1, ..SearchConfig::default() };
        group.bench_function(format!("{n}x{m}"), |b| b.iter(|| black_box(cpw_search(&cfg).unwrap())));
    }
    group.finish();
}

criterion_group!(benches, exact_vs_approx, weights, wordlengths, search);
criterion_main!(benches);

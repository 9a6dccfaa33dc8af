//! Sequential versus parallel indicator computation on generated corpora.
//!
//! `cargo bench -p disrupt-core` runs both; building with
//! `--no-default-features` makes every worker count take the sequential path.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use disrupt_core::synth::{generate_corpus, GeneratorParams};
use disrupt_core::{compute_all, IndicatorConfig};

fn indicators(c: &mut Criterion) {
    let mut group = c.benchmark_group("compute_all");
    group.sample_size(10);
    for n_papers in [5_000usize, 20_000] {
        let params = GeneratorParams {
            n_papers,
            mean_out_degree: 20.0,
            journals: 20,
            planted_disruptive: 20,
            ..Default::default()
        };
        let corpus = generate_corpus(&params).unwrap().to_corpus().unwrap();
        let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
        for (label, workers) in [("sequential", 1), ("parallel", cores.max(2))] {
            let config = IndicatorConfig {
                workers,
                ..Default::default()
            };
            group.bench_with_input(BenchmarkId::new(label, n_papers), &config, |b, config| {
                b.iter(|| compute_all(&corpus, config).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, indicators);
criterion_main!(benches);

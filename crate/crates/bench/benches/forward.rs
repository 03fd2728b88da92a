use blendcnn_bench::{model, random_examples};
use blendcnn_core::models::{Mode, ModelConfig};
use blendcnn_core::numerics::cross_entropy;
use blendcnn_core::AdamConfig;
use criterion::{criterion_group, criterion_main, BatchSize, Criterion, Throughput};
use std::hint::black_box;

const BATCH: usize = 32;

fn configs() -> Vec<ModelConfig> {
    vec![
        ModelConfig::blendcnn(3, 20_000, 4),
        ModelConfig::blendcnn(8, 20_000, 4),
        ModelConfig::kimcnn(20_000, 4),
    ]
}

fn inference(c: &mut Criterion) {
    let mut group = c.benchmark_group("predict");
    group.throughput(Throughput::Elements(BATCH as u64));
    group.sample_size(20);
    for cfg in configs() {
        let state = model(&cfg);
        let data = random_examples(BATCH, &cfg, 1);
        let batch: Vec<_> = data.iter().collect();
        group.bench_function(cfg.name(), |b| b.iter(|| state.predict(black_box(&batch)).unwrap()));
    }
    group.finish();
}

fn train_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("train_step");
    group.sample_size(10);
    for cfg in configs() {
        let data = random_examples(BATCH, &cfg, 2);
        let batch: Vec<_> = data.iter().collect();
        let labels: Vec<usize> = data.iter().map(|e| e.label.unwrap()).collect();
        group.bench_function(cfg.name(), |b| {
            b.iter_batched(
                || model(&cfg),
                |mut state| {
                    let cache = state.forward(&batch, Mode::Eval).unwrap();
                    let loss = cross_entropy(&cache.logits, &labels).unwrap();
                    state.backward(&batch, &cache, &loss.grad).unwrap();
                    state.adam_update(&AdamConfig::default()).unwrap();
                    state
                },
                BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

criterion_group!(benches, inference, train_step);
criterion_main!(benches);

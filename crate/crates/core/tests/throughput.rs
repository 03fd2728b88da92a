//! Timing properties. Tests here take a lock so they never share the CPU.

use std::sync::Mutex;
use std::time::Duration;

use blendcnn_core::bench::{measure_throughput, measure_throughput_raw, FixedLatencyModel, ThroughputConfig};
use blendcnn_core::text::{tokenize, Example, RawRecord, Vocabulary};

static CPU: Mutex<()> = Mutex::new(());

fn stub_inputs(n: usize) -> Vec<Example> {
    (0..n)
        .map(|i| Example {
            id: i.to_string(),
            token_ids: vec![2],
            valid_len: 1,
            label: None,
            teacher_logits: None,
        })
        .collect()
}

#[test]
fn doubling_samples_keeps_throughput() {
    let _cpu = CPU.lock().unwrap();
    let stub = FixedLatencyModel {
        per_batch: Duration::from_micros(500),
    };
    let data = stub_inputs(2048);
    let cfg = ThroughputConfig {
        n_samples: 512,
        ..ThroughputConfig::default()
    };
    let one = measure_throughput(&stub, &data, &cfg).unwrap();
    let two = measure_throughput(&stub, &data, &ThroughputConfig { n_samples: 1024, ..cfg }).unwrap();
    let ratio = two.sentences_per_second / one.sentences_per_second;
    assert!((ratio - 1.0).abs() < 0.10, "ratio {ratio}");
    assert_eq!(one.repetitions.len(), 5);
}

#[test]
fn encoding_is_outside_the_timed_section() {
    let _cpu = CPU.lock().unwrap();
    // Long raw documents make tokenization far slower than the stub's forward pass.
    let text = "lorem ipsum dolor sit amet ".repeat(2000);
    let records: Vec<RawRecord> = (0..256)
        .map(|i| RawRecord {
            id: format!("r{i}"),
            text: text.clone(),
            label: 0,
        })
        .collect();
    let vocab = Vocabulary::build(vec![tokenize(&text)], 100).unwrap();
    let stub = FixedLatencyModel {
        per_batch: Duration::from_micros(300),
    };
    let cfg = ThroughputConfig {
        n_samples: 256,
        ..ThroughputConfig::default()
    };
    let raw = measure_throughput_raw(&stub, &records, &vocab, 64, &cfg).unwrap();
    let encoded = measure_throughput(&stub, &stub_inputs(256), &cfg).unwrap();
    let ratio = raw.wall_seconds / encoded.wall_seconds;
    assert!(
        (ratio - 1.0).abs() < 0.05,
        "raw {} vs encoded {}",
        raw.wall_seconds,
        encoded.wall_seconds
    );
}

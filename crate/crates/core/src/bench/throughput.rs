//! Inference throughput: sentences per second over eval-mode forward passes.

use std::hint::black_box;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::ModelState;
use crate::text::{encode_records, Example, RawRecord, Vocabulary};

/// Something that can run a forward pass over a batch.
pub trait BatchInference: Sync {
    fn name(&self) -> String;
    fn infer_batch(&self, batch: &[&Example]) -> Result<()>;
}

impl BatchInference for ModelState {
    fn name(&self) -> String {
        self.config.name()
    }

    fn infer_batch(&self, batch: &[&Example]) -> Result<()> {
        black_box(self.predict(batch)?);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThroughputConfig {
    pub n_samples: usize,
    pub batch_size: usize,
    pub repetitions: usize,
    pub warmup_batches: usize,
    pub seed: u64,
    /// Worker threads for the timed section; 1 is the reference setting.
    pub threads: usize,
}

impl Default for ThroughputConfig {
    fn default() -> Self {
        Self {
            n_samples: 1000,
            batch_size: 32,
            repetitions: 5,
            warmup_batches: 2,
            seed: 0,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputResult {
    pub model: String,
    pub n_samples: usize,
    pub batch_size: usize,
    pub threads: usize,
    /// Seconds per repetition, in run order.
    pub repetitions: Vec<f64>,
    /// Median of `repetitions`.
    pub wall_seconds: f64,
    pub sentences_per_second: f64,
    pub hardware: String,
}

/// Median; the mean of the two middle values for even lengths.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of nothing");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

pub fn hardware_note() -> String {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    format!(
        "{}-{}, {threads} hardware threads, f64 CPU",
        std::env::consts::ARCH,
        std::env::consts::OS
    )
}

fn run_batches<M: BatchInference + ?Sized>(model: &M, batches: &[Vec<&Example>], threads: usize) -> Result<()> {
    if threads <= 1 {
        for b in batches {
            model.infer_batch(b)?;
        }
        return Ok(());
    }
    let per = batches.len().div_ceil(threads);
    std::thread::scope(|scope| {
        let handles: Vec<_> = batches
            .chunks(per.max(1))
            .map(|group| {
                scope.spawn(move || -> Result<()> {
                    for b in group {
                        model.infer_batch(b)?;
                    }
                    Ok(())
                })
            })
            .collect();
        handles
            .into_iter()
            .try_for_each(|h| h.join().expect("inference worker panicked"))
    })
}

/// Times forward passes over `n_samples` examples drawn from `dataset` by
/// seed. Inputs must already be encoded; nothing but inference is timed.
pub fn measure_throughput<M: BatchInference + ?Sized>(
    model: &M,
    dataset: &[Example],
    cfg: &ThroughputConfig,
) -> Result<ThroughputResult> {
    if cfg.n_samples == 0 || cfg.batch_size == 0 || cfg.repetitions == 0 {
        return Err(Error::Config(
            "n_samples, batch_size and repetitions must be positive".into(),
        ));
    }
    if dataset.len() < cfg.n_samples {
        return Err(Error::InvalidArgument(format!(
            "dataset has {} examples, {} needed",
            dataset.len(),
            cfg.n_samples
        )));
    }
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
    order.truncate(cfg.n_samples);
    let batches: Vec<Vec<&Example>> = order
        .chunks(cfg.batch_size)
        .map(|c| c.iter().map(|&i| &dataset[i]).collect())
        .collect();

    for b in batches.iter().cycle().take(cfg.warmup_batches) {
        model.infer_batch(b)?;
    }
    let mut repetitions = Vec::with_capacity(cfg.repetitions);
    for _ in 0..cfg.repetitions {
        let start = Instant::now();
        run_batches(model, &batches, cfg.threads)?;
        repetitions.push(start.elapsed().as_secs_f64());
    }
    let wall_seconds = median(&repetitions);
    Ok(ThroughputResult {
        model: model.name(),
        n_samples: cfg.n_samples,
        batch_size: cfg.batch_size,
        threads: cfg.threads.max(1),
        sentences_per_second: cfg.n_samples as f64 / wall_seconds,
        wall_seconds,
        repetitions,
        hardware: hardware_note(),
    })
}

/// Encodes raw records first, outside the timed section.
pub fn measure_throughput_raw<M: BatchInference + ?Sized>(
    model: &M,
    records: &[RawRecord],
    vocab: &Vocabulary,
    seq_len: usize,
    cfg: &ThroughputConfig,
) -> Result<ThroughputResult> {
    let encoded = encode_records(records, vocab, seq_len, false);
    measure_throughput(model, &encoded, cfg)
}

/// Stand-in model that spends a fixed wall time per batch.
pub struct FixedLatencyModel {
    pub per_batch: std::time::Duration,
}

impl BatchInference for FixedLatencyModel {
    fn name(&self) -> String {
        format!("fixed-latency-{}us", self.per_batch.as_micros())
    }

    fn infer_batch(&self, _batch: &[&Example]) -> Result<()> {
        // Spin rather than sleep: sleep overshoot is tens of microseconds.
        let start = Instant::now();
        while start.elapsed() < self.per_batch {
            std::hint::spin_loop();
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Duration;

    fn dataset(n: usize) -> Vec<Example> {
        (0..n)
            .map(|i| Example {
                id: format!("d:{i}"),
                token_ids: vec![2, 3, 0],
                valid_len: 2,
                label: None,
                teacher_logits: None,
            })
            .collect()
    }

    #[test]
    fn median_cases() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn too_small_dataset_rejected() {
        let m = FixedLatencyModel {
            per_batch: Duration::ZERO,
        };
        assert!(measure_throughput(&m, &dataset(10), &ThroughputConfig::default()).is_err());
    }

    #[test]
    fn synthetic_latency_matches_analytic_rate() {
        let m = FixedLatencyModel {
            per_batch: Duration::from_millis(1),
        };
        let cfg = ThroughputConfig::default();
        let r = measure_throughput(&m, &dataset(1200), &cfg).unwrap();
        let batches = cfg.n_samples.div_ceil(cfg.batch_size);
        let analytic = cfg.n_samples as f64 / (batches as f64 * 1e-3);
        let rel = (r.sentences_per_second - analytic).abs() / analytic;
        assert!(rel < 0.05, "{} vs {analytic}", r.sentences_per_second);
        assert_eq!(r.repetitions.len(), 5);
        assert_eq!(r.wall_seconds, median(&r.repetitions));
    }
}

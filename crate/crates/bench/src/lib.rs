//! Fixtures shared by the criterion benches.

use blendcnn_core::models::{ModelConfig, ModelState};
use blendcnn_core::text::{Example, PAD_ID};
use blendcnn_core::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random documents filling between half and all of `seq_len`.
pub fn random_examples(n: usize, config: &ModelConfig, seed: u64) -> Vec<Example> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let valid_len = rng.random_range(config.seq_len / 2..=config.seq_len).max(1);
            let mut token_ids = vec![PAD_ID; config.seq_len];
            for t in &mut token_ids[..valid_len] {
                *t = rng.random_range(2..config.vocab_size as u32);
            }
            Example {
                id: format!("bench:{i}"),
                token_ids,
                valid_len,
                label: Some(i % config.n_classes),
                teacher_logits: None,
            }
        })
        .collect()
}

pub fn model(config: &ModelConfig) -> ModelState {
    ModelState::init(config, 0, None).expect("valid bench config")
}

pub fn random_tensor(shape: &[usize], seed: u64) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).expect("shape matches")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples_respect_config() {
        let cfg = ModelConfig::blendcnn(3, 50, 4);
        for e in random_examples(20, &cfg, 1) {
            e.validate(cfg.n_classes).unwrap();
            assert_eq!(e.token_ids.len(), cfg.seq_len);
            assert!(e.token_ids.iter().all(|&t| (t as usize) < cfg.vocab_size));
        }
    }
}

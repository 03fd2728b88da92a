//! Surrogate teacher: an 8-layer BlendCNN trained directly on a larger
//! labeled pool, standing in for a large pretrained teacher.

use super::train::{train_direct, RunLedger, TrainConfig, TrainMode, TrainOptions};
use crate::error::Result;
use crate::models::{ModelConfig, ModelKind, ModelState};
use crate::text::Example;

pub const SURROGATE_TEACHER_LAYERS: usize = 8;

/// `base` turned into an 8-layer BlendCNN.
pub fn surrogate_teacher_config(base: &ModelConfig) -> ModelConfig {
    ModelConfig {
        kind: ModelKind::BlendCnn,
        n_layers: SURROGATE_TEACHER_LAYERS,
        ..base.clone()
    }
}

pub fn make_surrogate_teacher(
    pool: &[Example],
    student_labeled: usize,
    base: &ModelConfig,
    train: &TrainConfig,
    opts: TrainOptions<'_>,
) -> Result<(ModelState, RunLedger)> {
    let small_pool = (pool.len() <= student_labeled).then(|| {
        format!(
            "teacher pool of {} is not larger than the student's {student_labeled} labeled examples",
            pool.len()
        )
    });
    if let Some(msg) = &small_pool {
        log::warn!("{msg}");
    }
    let config = surrogate_teacher_config(base);
    let mut state = ModelState::init(&config, train.seed, None)?;
    let cfg = TrainConfig {
        mode: TrainMode::DirectCe,
        alpha: 0.0,
        ..train.clone()
    };
    let mut ledger = train_direct(&mut state, pool, &cfg, opts)?;
    ledger.warnings.extend(small_pool);
    Ok((state, ledger))
}

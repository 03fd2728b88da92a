//! Desk-scale distillation protocol: a surrogate teacher trained on a large
//! labeled pool pseudo-labels an unlabeled pool; 3-layer students are then
//! trained directly, by distillation with the unlabeled pool, and by
//! distillation on the labeled examples alone.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bench::median;
use crate::distill::{
    attach_logits, evaluate, infer_logits, make_surrogate_teacher, train_direct, train_distill, TrainConfig, TrainMode,
    TrainOptions,
};
use crate::error::{Error, Result};
use crate::models::{ModelConfig, ModelState};
use crate::text::{
    encode_records, load_csv_dataset, split_labeled_unlabeled, stratified_sample, tokenize, CsvSchema, Example,
    RawRecord, Vocabulary,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeskConfig {
    pub schema: CsvSchema,
    pub n_classes: usize,
    pub per_class: usize,
    pub unlabeled_ratio: usize,
    pub teacher_per_class: usize,
    pub test_size: usize,
    pub sample_seed: u64,
    pub vocab_cap: usize,
    /// Student architecture; the teacher is its 8-layer variant.
    pub student: ModelConfig,
    pub teacher_train: TrainConfig,
    pub direct_train: TrainConfig,
    pub distill_train: TrainConfig,
    pub labeled_only_distill_train: TrainConfig,
    pub seeds: Vec<u64>,
}

impl Default for DeskConfig {
    fn default() -> Self {
        let direct = TrainConfig {
            mode: TrainMode::DirectCe,
            epochs: 30,
            ..TrainConfig::default()
        };
        Self {
            schema: CsvSchema::default(),
            n_classes: 4,
            per_class: 100,
            unlabeled_ratio: 10,
            teacher_per_class: 10_000,
            test_size: 2000,
            sample_seed: 17,
            vocab_cap: 20_000,
            student: ModelConfig {
                seq_len: 32,
                ..ModelConfig::blendcnn(3, 20_000, 4)
            },
            teacher_train: TrainConfig {
                epochs: 2,
                ..direct.clone()
            },
            direct_train: direct,
            distill_train: TrainConfig {
                epochs: 8,
                ..TrainConfig::default()
            },
            labeled_only_distill_train: TrainConfig {
                epochs: 30,
                ..TrainConfig::default()
            },
            seeds: vec![1, 2, 3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub direct: f64,
    pub distilled: f64,
    pub distilled_labeled_only: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeskOutcome {
    pub vocab_size: usize,
    pub n_labeled: usize,
    pub n_unlabeled: usize,
    pub n_teacher_pool: usize,
    pub n_test: usize,
    pub teacher_accuracy: f64,
    pub runs: Vec<SeedOutcome>,
    pub median_direct: f64,
    pub median_distilled: f64,
    pub median_distilled_labeled_only: f64,
}

fn pick(records: &[RawRecord], idx: &[usize]) -> Vec<RawRecord> {
    idx.iter().map(|&i| records[i].clone()).collect()
}

fn with_seed(cfg: &TrainConfig, seed: u64) -> TrainConfig {
    TrainConfig { seed, ..cfg.clone() }
}

pub fn run_desk_experiment(train_csv: &Path, test_csv: &Path, cfg: &DeskConfig) -> Result<DeskOutcome> {
    if cfg.seeds.is_empty() {
        return Err(Error::Config("at least one seed is required".into()));
    }
    let train = load_csv_dataset(train_csv, &cfg.schema)?;
    let test = load_csv_dataset(test_csv, &cfg.schema)?;

    let split = split_labeled_unlabeled(
        &train,
        cfg.n_classes,
        cfg.per_class,
        cfg.unlabeled_ratio,
        cfg.sample_seed,
    )?;
    let pool_idx = stratified_sample(&train, cfg.n_classes, cfg.teacher_per_class, cfg.sample_seed)?;
    let test_idx = stratified_sample(&test, cfg.n_classes, cfg.test_size / cfg.n_classes, cfg.sample_seed)?;

    let pool_records = pick(&train, &pool_idx);
    let vocab = Vocabulary::build(pool_records.iter().map(|r| tokenize(&r.text)), cfg.vocab_cap)?;
    let model = ModelConfig {
        vocab_size: vocab.len(),
        n_classes: cfg.n_classes,
        ..cfg.student.clone()
    };
    let seq_len = model.seq_len;
    let pool = encode_records(&pool_records, &vocab, seq_len, true);
    let mut labeled = encode_records(&pick(&train, &split.labeled), &vocab, seq_len, true);
    let mut unlabeled = encode_records(&pick(&train, &split.unlabeled), &vocab, seq_len, false);
    let test_set = encode_records(&pick(&test, &test_idx), &vocab, seq_len, true);

    let (teacher, _) = make_surrogate_teacher(
        &pool,
        labeled.len(),
        &model,
        &cfg.teacher_train,
        TrainOptions::default(),
    )?;
    let teacher_accuracy = evaluate(&teacher, &test_set, 256)?.accuracy;
    log::info!("surrogate teacher test accuracy {teacher_accuracy:.4}");
    let records = infer_logits(&teacher, &labeled, 256)?;
    attach_logits(&mut labeled, &records, cfg.n_classes)?;
    let records = infer_logits(&teacher, &unlabeled, 256)?;
    attach_logits(&mut unlabeled, &records, cfg.n_classes)?;

    let mut runs = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let score = |state: &ModelState| evaluate(state, &test_set, 256).map(|e| e.accuracy);

        let mut s = ModelState::init(&model, seed, None)?;
        train_direct(
            &mut s,
            &labeled,
            &with_seed(&cfg.direct_train, seed),
            TrainOptions::default(),
        )?;
        let direct = score(&s)?;

        let mut s = ModelState::init(&model, seed, None)?;
        train_distill(
            &mut s,
            &labeled,
            &unlabeled,
            &with_seed(&cfg.distill_train, seed),
            TrainOptions::default(),
        )?;
        let distilled = score(&s)?;

        let mut s = ModelState::init(&model, seed, None)?;
        let no_pool: &[Example] = &[];
        let alone = TrainConfig {
            unlabeled_ratio: 0,
            ..with_seed(&cfg.labeled_only_distill_train, seed)
        };
        train_distill(&mut s, &labeled, no_pool, &alone, TrainOptions::default())?;
        let distilled_labeled_only = score(&s)?;

        log::info!(
            "seed {seed}: direct {direct:.4}, distilled {distilled:.4}, labeled-only {distilled_labeled_only:.4}"
        );
        runs.push(SeedOutcome {
            seed,
            direct,
            distilled,
            distilled_labeled_only,
        });
    }
    let med = |f: fn(&SeedOutcome) -> f64| median(&runs.iter().map(f).collect::<Vec<_>>());
    Ok(DeskOutcome {
        vocab_size: vocab.len(),
        n_labeled: labeled.len(),
        n_unlabeled: unlabeled.len(),
        n_teacher_pool: pool.len(),
        n_test: test_set.len(),
        teacher_accuracy,
        median_direct: med(|r| r.direct),
        median_distilled: med(|r| r.distilled),
        median_distilled_labeled_only: med(|r| r.distilled_labeled_only),
        runs,
    })
}

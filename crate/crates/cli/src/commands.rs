use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use blendcnn_core::bench::{measure_throughput, report, BatchInference, ReportRow};
use blendcnn_core::distill::{
    attach_logits, evaluate, infer_logits, make_surrogate_teacher, read_logits_jsonl, train_direct, train_distill,
    write_logits_jsonl, write_predictions_csv, RunLedger, TrainMode, TrainOptions,
};
use blendcnn_core::models::{self, load_checkpoint, save_checkpoint, ModelConfig, ModelKind, ModelState};
use blendcnn_core::synth::write_synthetic_corpus;
use blendcnn_core::text::{
    encode_records, load_csv_dataset, load_glove, split_labeled_unlabeled, stratified_sample, tokenize, Example,
    RawRecord, Split, Vocabulary, PAD_ID,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::{self, RunConfig};
use crate::{ConfigError, RunSpec, OUT_ENV};

const INFER_BATCH: usize = 256;

struct Run {
    cfg: RunConfig,
    out: PathBuf,
}

fn prepare(spec: &RunSpec, command: &str, adjust: impl FnOnce(&mut RunConfig)) -> Result<Run> {
    let mut cfg = config::resolve(spec.config.as_deref(), &spec.overrides, spec.seed)?;
    adjust(&mut cfg);
    let out = match &spec.out {
        Some(p) => p.clone(),
        None => std::env::var_os(OUT_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("runs"))
            .join(command),
    };
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let echoed = config::echo(&cfg, &out)?;
    log::info!("effective config written to {}", echoed.display());
    Ok(Run { cfg, out })
}

fn required<'a>(value: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    value
        .as_deref()
        .ok_or_else(|| ConfigError(format!("{key} is not set")).into())
}

fn load_vocab(cfg: &RunConfig) -> Result<Vocabulary> {
    Ok(Vocabulary::load(required(&cfg.vocab.path, "vocab.path")?)?)
}

fn load_train(cfg: &RunConfig) -> Result<Vec<RawRecord>> {
    Ok(load_csv_dataset(
        required(&cfg.data.train_csv, "data.train_csv")?,
        &cfg.data.schema,
    )?)
}

fn pick(records: &[RawRecord], idx: &[usize]) -> Vec<RawRecord> {
    idx.iter().map(|&i| records[i].clone()).collect()
}

/// `per_class` records of each class, or all of them when `per_class` is 0.
fn subset(records: &[RawRecord], cfg: &RunConfig, per_class: usize) -> Result<Vec<RawRecord>> {
    if per_class == 0 {
        return Ok(records.to_vec());
    }
    let idx = stratified_sample(records, cfg.data.n_classes, per_class, cfg.data.sample_seed)?;
    Ok(pick(records, &idx))
}

fn split(records: &[RawRecord], cfg: &RunConfig) -> Result<Split> {
    Ok(split_labeled_unlabeled(
        records,
        cfg.data.n_classes,
        cfg.data.per_class,
        cfg.data.unlabeled_ratio,
        cfg.data.sample_seed,
    )?)
}

fn test_set(cfg: &RunConfig, vocab: &Vocabulary, seq_len: usize) -> Result<Option<Vec<Example>>> {
    let Some(path) = &cfg.data.test_csv else {
        return Ok(None);
    };
    let records = load_csv_dataset(path, &cfg.data.schema)?;
    let records = subset(&records, cfg, cfg.data.test_size / cfg.data.n_classes)?;
    Ok(Some(encode_records(&records, vocab, seq_len, true)))
}

fn model_config(cfg: &RunConfig, vocab: &Vocabulary) -> ModelConfig {
    ModelConfig {
        vocab_size: vocab.len(),
        n_classes: cfg.data.n_classes,
        ..cfg.model.clone()
    }
}

/// Rejects checkpoints that disagree with the data they are applied to.
fn check_compatible(state: &ModelState, cfg: &RunConfig, vocab: &Vocabulary, path: &Path) -> Result<()> {
    let c = &state.config;
    if c.vocab_size != vocab.len() || c.n_classes != cfg.data.n_classes {
        return Err(ConfigError(format!(
            "{}: checkpoint expects vocab {} and {} classes, run has vocab {} and {} classes",
            path.display(),
            c.vocab_size,
            c.n_classes,
            vocab.len(),
            cfg.data.n_classes
        ))
        .into());
    }
    Ok(())
}

fn finish_training(run: &Run, state: &ModelState, ledger: &RunLedger) -> Result<()> {
    let ckpt = run.out.join("model.ckpt");
    save_checkpoint(state, &ckpt)?;
    ledger.save(&run.out.join("ledger.json"))?;
    if let Some(last) = ledger.epochs.last() {
        println!(
            "{}: {} epochs, final loss {:.6}{}",
            ledger.model,
            ledger.epochs.len(),
            last.train_loss,
            last.eval_accuracy
                .map(|a| format!(", eval accuracy {a:.4}"))
                .unwrap_or_default()
        );
    }
    println!("checkpoint {}", ckpt.display());
    Ok(())
}

pub fn build_vocab(spec: &RunSpec) -> Result<()> {
    let run = prepare(spec, "build-vocab", |_| {})?;
    let records = load_train(&run.cfg)?;
    let vocab = Vocabulary::build(records.iter().map(|r| tokenize(&r.text)), run.cfg.vocab.cap)?;
    let path = run.out.join("vocab.tsv");
    vocab.save(&path)?;
    println!("{} tokens -> {}", vocab.len(), path.display());
    Ok(())
}

pub fn train(spec: &RunSpec, teacher: bool) -> Result<()> {
    let run = prepare(spec, "train", |cfg| {
        cfg.train.mode = TrainMode::DirectCe;
        cfg.train.alpha = 0.0;
    })?;
    let cfg = &run.cfg;
    cfg.train.validate()?;
    let vocab = load_vocab(cfg)?;
    let model = model_config(cfg, &vocab);
    let records = load_train(cfg)?;
    let test = test_set(cfg, &vocab, model.seq_len)?;
    let ckpt_dir = run.out.join("checkpoints");
    std::fs::create_dir_all(&ckpt_dir).with_context(|| format!("creating {}", ckpt_dir.display()))?;
    let opts = TrainOptions {
        eval_set: test.as_deref(),
        checkpoint_dir: Some(&ckpt_dir),
    };

    let (state, ledger) = if teacher {
        let pool = subset(&records, cfg, cfg.data.teacher_per_class)?;
        let pool = encode_records(&pool, &vocab, model.seq_len, true);
        let student_labeled = cfg.data.per_class * cfg.data.n_classes;
        make_surrogate_teacher(&pool, student_labeled, &model, &cfg.train, opts)?
    } else {
        let labeled = subset(&records, cfg, cfg.data.per_class)?;
        let labeled = encode_records(&labeled, &vocab, model.seq_len, true);
        let glove = match &cfg.glove.path {
            Some(p) => {
                let m = load_glove(p, &vocab, model.embed_dim, cfg.seed)?;
                log::info!("pretrained embedding coverage {:.3}", m.coverage());
                Some(m)
            }
            None => None,
        };
        let mut state = ModelState::init(&model, cfg.seed, glove)?;
        let ledger = train_direct(&mut state, &labeled, &cfg.train, opts)?;
        (state, ledger)
    };
    finish_training(&run, &state, &ledger)
}

pub fn infer(spec: &RunSpec, checkpoint: &Path) -> Result<()> {
    let run = prepare(spec, "infer-logits", |_| {})?;
    let cfg = &run.cfg;
    let vocab = load_vocab(cfg)?;
    let teacher = load_checkpoint(checkpoint)?;
    check_compatible(&teacher, cfg, &vocab, checkpoint)?;
    let records = load_train(cfg)?;
    let split = split(&records, cfg)?;
    let idx: Vec<usize> = split.labeled.iter().chain(&split.unlabeled).copied().collect();
    let examples = encode_records(&pick(&records, &idx), &vocab, teacher.config.seq_len, false);
    let rows = infer_logits(&teacher, &examples, INFER_BATCH)?;
    let path = run.out.join("logits.jsonl");
    write_logits_jsonl(&path, &rows)?;
    println!(
        "{} logit rows ({} labeled, {} unlabeled) -> {}",
        rows.len(),
        split.labeled.len(),
        split.unlabeled.len(),
        path.display()
    );
    Ok(())
}

pub fn distill(spec: &RunSpec, logits: &Path, labeled_only: bool) -> Result<()> {
    let run = prepare(spec, "distill", |cfg| {
        if labeled_only {
            cfg.train.unlabeled_ratio = 0;
        }
    })?;
    let cfg = &run.cfg;
    if cfg.train.mode == TrainMode::DirectCe {
        return Err(ConfigError("train.mode direct_ce is not a distillation mode; use `train`".into()).into());
    }
    cfg.train.validate()?;
    let teacher_rows = read_logits_jsonl(logits)?;
    let vocab = load_vocab(cfg)?;
    let model = model_config(cfg, &vocab);
    let records = load_train(cfg)?;
    let split = split(&records, cfg)?;
    let mut labeled = encode_records(&pick(&records, &split.labeled), &vocab, model.seq_len, true);
    attach_logits(&mut labeled, &teacher_rows, cfg.data.n_classes)?;
    let mut unlabeled = Vec::new();
    if !labeled_only {
        unlabeled = encode_records(&pick(&records, &split.unlabeled), &vocab, model.seq_len, false);
        attach_logits(&mut unlabeled, &teacher_rows, cfg.data.n_classes)?;
    }
    let test = test_set(cfg, &vocab, model.seq_len)?;
    let ckpt_dir = run.out.join("checkpoints");
    std::fs::create_dir_all(&ckpt_dir).with_context(|| format!("creating {}", ckpt_dir.display()))?;
    let opts = TrainOptions {
        eval_set: test.as_deref(),
        checkpoint_dir: Some(&ckpt_dir),
    };
    let mut state = ModelState::init(&model, cfg.seed, None)?;
    let ledger = train_distill(&mut state, &labeled, &unlabeled, &cfg.train, opts)?;
    finish_training(&run, &state, &ledger)
}

pub fn eval(spec: &RunSpec, checkpoint: &Path) -> Result<()> {
    let run = prepare(spec, "eval", |_| {})?;
    let cfg = &run.cfg;
    let vocab = load_vocab(cfg)?;
    let state = load_checkpoint(checkpoint)?;
    check_compatible(&state, cfg, &vocab, checkpoint)?;
    let test =
        test_set(cfg, &vocab, state.config.seq_len)?.ok_or_else(|| ConfigError("data.test_csv is not set".into()))?;
    let result = evaluate(&state, &test, INFER_BATCH)?;
    write_predictions_csv(&run.out.join("predictions.csv"), &result.predictions)?;
    let summary = json!({
        "checkpoint": checkpoint,
        "model": state.config.name(),
        "n": test.len(),
        "accuracy": result.accuracy,
        "confusion": result.confusion,
    });
    std::fs::write(
        run.out.join("eval.json"),
        serde_json::to_string_pretty(&summary)? + "\n",
    )?;
    println!(
        "{}: accuracy {:.4} on {} examples",
        state.config.name(),
        result.accuracy,
        test.len()
    );
    Ok(())
}

/// Seeded random documents for timing when no data is configured.
fn random_examples(n: usize, vocab_size: usize, seq_len: usize, seed: u64) -> Vec<Example> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let valid_len = rng.random_range(1..=seq_len);
            let mut token_ids = vec![PAD_ID; seq_len];
            for t in &mut token_ids[..valid_len] {
                *t = rng.random_range(2..vocab_size as u32);
            }
            Example {
                id: format!("random:{i}"),
                token_ids,
                valid_len,
                label: None,
                teacher_logits: None,
            }
        })
        .collect()
}

fn bench_models(cfg: &RunConfig, checkpoints: &[PathBuf]) -> Result<Vec<ModelState>> {
    if !checkpoints.is_empty() {
        return checkpoints
            .iter()
            .map(|p| load_checkpoint(p).map_err(Into::into))
            .collect();
    }
    let mut base = cfg.model.clone();
    if let Some(p) = &cfg.vocab.path {
        base.vocab_size = Vocabulary::load(p)?.len();
    }
    cfg.bench
        .models
        .iter()
        .map(|name| {
            let model = match name.as_str() {
                "kimcnn" => ModelConfig {
                    kind: ModelKind::KimCnn,
                    ..base.clone()
                },
                other => {
                    let layers = other
                        .strip_prefix("blendcnn-")
                        .and_then(|n| n.parse().ok())
                        .ok_or_else(|| ConfigError(format!("unknown bench model {other:?}")))?;
                    ModelConfig {
                        kind: ModelKind::BlendCnn,
                        n_layers: layers,
                        ..base.clone()
                    }
                }
            };
            Ok(ModelState::init(&model, cfg.seed, None)?)
        })
        .collect()
}

pub fn bench(spec: &RunSpec, checkpoints: &[PathBuf]) -> Result<()> {
    let run = prepare(spec, "bench", |_| {})?;
    let cfg = &run.cfg;
    let tp = &cfg.bench.throughput;
    let models = bench_models(cfg, checkpoints)?;
    let mut rows = Vec::new();
    let mut results = Vec::new();
    for state in &models {
        let seq_len = state.config.seq_len;
        let data = match (&cfg.data.test_csv, &cfg.vocab.path) {
            (Some(_), Some(_)) => {
                let vocab = load_vocab(cfg)?;
                check_compatible(state, cfg, &vocab, Path::new(&state.config.name()))?;
                test_set(cfg, &vocab, seq_len)?.unwrap_or_default()
            }
            _ => random_examples(tp.n_samples, state.config.vocab_size, seq_len, tp.seed),
        };
        log::info!("timing {} on {} examples", state.name(), tp.n_samples);
        let result = measure_throughput(state, &data, tp)?;
        rows.push(ReportRow::new(&state.config, Some(&result)));
        results.push(result);
    }
    let hardware = results.first().map(|r| r.hardware.clone());
    let rep = report(rows, hardware);
    let text = rep.to_text();
    std::fs::write(run.out.join("report.txt"), &text)?;
    std::fs::write(run.out.join("report.csv"), rep.to_csv())?;
    std::fs::write(
        run.out.join("throughput.json"),
        serde_json::to_string_pretty(&results)? + "\n",
    )?;
    print!("{text}");
    Ok(())
}

pub fn param_count(spec: &RunSpec) -> Result<()> {
    let run = prepare(spec, "param-count", |_| {})?;
    run.cfg.model.validate()?;
    let count = models::param_count(&run.cfg.model);
    let text = format!("{}\n{count}", run.cfg.model.name());
    std::fs::write(run.out.join("param_count.txt"), format!("{text}\n"))?;
    println!("{text}");
    Ok(())
}

pub fn synth_corpus(spec: &RunSpec) -> Result<()> {
    let run = prepare(spec, "synth-corpus", |cfg| {
        if let Some(seed) = spec.seed {
            cfg.synth.seed = seed;
        }
    })?;
    let (train, test) = write_synthetic_corpus(&run.out, &run.cfg.synth)?;
    println!("{}\n{}", train.display(), test.display());
    Ok(())
}

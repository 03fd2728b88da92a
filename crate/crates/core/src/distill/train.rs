//! Direct and distillation training loops.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::eval::evaluate;
use crate::error::{Error, Result};
use crate::models::{save_checkpoint, Mode, ModelState};
use crate::numerics::{cross_entropy, cross_entropy_masked, mae_loss, AdamConfig, Loss, Tensor};
use crate::text::Example;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainMode {
    DirectCe,
    DistillMae,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub mode: TrainMode,
    /// Weight of the cross-entropy term in `mixed` mode.
    pub alpha: f64,
    pub adam: AdamConfig,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Expected unlabeled examples per labeled example.
    pub unlabeled_ratio: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            mode: TrainMode::DistillMae,
            alpha: 0.0,
            adam: AdamConfig::default(),
            batch_size: 32,
            epochs: 10,
            seed: 0,
            unlabeled_ratio: 10,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.adam.validate()?;
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::Config("batch_size and epochs must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        if self.mode == TrainMode::DistillMae && self.alpha != 0.0 {
            return Err(Error::Config("distill_mae requires alpha = 0; use mixed".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean per-example training loss over the epoch.
    pub train_loss: f64,
    pub eval_accuracy: Option<f64>,
    pub wall_seconds: f64,
    pub checkpoint: Option<PathBuf>,
}

/// Append-only record of a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLedger {
    pub config_hash: String,
    pub seed: u64,
    pub mode: TrainMode,
    pub model: String,
    pub n_train: usize,
    pub epochs: Vec<EpochRecord>,
    pub warnings: Vec<String>,
}

impl RunLedger {
    fn new(state: &ModelState, cfg: &TrainConfig, n_train: usize) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_vec(&state.config).expect("config serializes"));
        hasher.update(serde_json::to_vec(cfg).expect("config serializes"));
        let config_hash = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();
        Self {
            config_hash,
            seed: cfg.seed,
            mode: cfg.mode,
            model: state.config.name(),
            n_train,
            epochs: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn push(&mut self, record: EpochRecord) {
        self.epochs.push(record);
    }

    fn warn(&mut self, msg: String) {
        log::warn!("{msg}");
        self.warnings.push(msg);
    }

    /// Per-epoch losses, for reproducibility comparisons.
    pub fn losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.train_loss).collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_vec_pretty(self).expect("ledger serializes");
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_slice(&bytes).map_err(|e| Error::parse(path, e.line(), e.to_string()))
    }
}

/// Optional side outputs of a training run.
#[derive(Debug, Clone, Copy, Default)]
pub struct TrainOptions<'a> {
    /// Evaluated after every epoch; accuracy goes into the ledger.
    pub eval_set: Option<&'a [Example]>,
    /// Receives `epoch_NNN.ckpt` after every epoch.
    pub checkpoint_dir: Option<&'a Path>,
}

fn batch_objective(cfg: &TrainConfig, logits: &Tensor, batch: &[&Example]) -> Result<Loss> {
    let teacher = || -> Result<Tensor> {
        let rows: Vec<Vec<f64>> = batch
            .iter()
            .map(|e| e.teacher_logits.clone().expect("checked before training"))
            .collect();
        Ok(Tensor::from_rows(&rows))
    };
    match cfg.mode {
        TrainMode::DirectCe => {
            let labels: Vec<usize> = batch
                .iter()
                .map(|e| e.label.expect("checked before training"))
                .collect();
            cross_entropy(logits, &labels)
        }
        TrainMode::DistillMae => mae_loss(logits, &teacher()?),
        TrainMode::Mixed => {
            let mae = mae_loss(logits, &teacher()?)?;
            if cfg.alpha == 0.0 {
                return Ok(mae);
            }
            let labels: Vec<Option<usize>> = batch.iter().map(|e| e.label).collect();
            let ce = cross_entropy_masked(logits, &labels)?;
            let mut grad = mae.grad;
            for (g, c) in grad.data_mut().iter_mut().zip(ce.grad.data()) {
                *g = (1.0 - cfg.alpha) * *g + cfg.alpha * c;
            }
            Ok(Loss {
                value: cfg.alpha * ce.value + (1.0 - cfg.alpha) * mae.value,
                grad,
            })
        }
    }
}

fn run_epochs(
    state: &mut ModelState,
    examples: &[&Example],
    cfg: &TrainConfig,
    opts: TrainOptions<'_>,
    mut ledger: RunLedger,
) -> Result<RunLedger> {
    if examples.is_empty() {
        return Err(Error::InvalidArgument("no training examples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    for epoch in 1..=cfg.epochs {
        let start = Instant::now();
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (step, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<&Example> = chunk.iter().map(|&i| examples[i]).collect();
            let cache = state.forward(&batch, Mode::Train(&mut rng))?;
            let loss = batch_objective(cfg, &cache.logits, &batch)?;
            if !loss.value.is_finite() {
                return Err(Error::NonFinite(format!("training loss at epoch {epoch}, step {step}")));
            }
            total += loss.value * batch.len() as f64;
            state.backward(&batch, &cache, &loss.grad)?;
            state.adam_update(&cfg.adam)?;
        }
        let eval_accuracy = match opts.eval_set {
            Some(set) => Some(evaluate(state, set, cfg.batch_size.max(64))?.accuracy),
            None => None,
        };
        let checkpoint = match opts.checkpoint_dir {
            Some(dir) => {
                let path = dir.join(format!("epoch_{epoch:03}.ckpt"));
                save_checkpoint(state, &path)?;
                Some(path)
            }
            None => None,
        };
        let record = EpochRecord {
            epoch,
            train_loss: total / examples.len() as f64,
            eval_accuracy,
            wall_seconds: start.elapsed().as_secs_f64(),
            checkpoint,
        };
        log::info!(
            "{} epoch {epoch}: loss {:.5}{}",
            ledger.model,
            record.train_loss,
            record
                .eval_accuracy
                .map(|a| format!(", accuracy {a:.4}"))
                .unwrap_or_default()
        );
        ledger.push(record);
    }
    Ok(ledger)
}

/// Cross-entropy training on labeled examples.
pub fn train_direct(
    state: &mut ModelState,
    labeled: &[Example],
    cfg: &TrainConfig,
    opts: TrainOptions<'_>,
) -> Result<RunLedger> {
    cfg.validate()?;
    if cfg.mode != TrainMode::DirectCe {
        return Err(Error::Config(format!(
            "train_direct needs mode direct_ce, got {:?}",
            cfg.mode
        )));
    }
    for ex in labeled {
        if ex.label.is_none() {
            return Err(Error::InvalidArgument(format!("example {} has no label", ex.id)));
        }
        ex.validate(state.config.n_classes)?;
    }
    let refs: Vec<&Example> = labeled.iter().collect();
    let ledger = RunLedger::new(state, cfg, refs.len());
    run_epochs(state, &refs, cfg, opts, ledger)
}

/// Distillation on the union of labeled and pseudo-labeled examples, all of
/// which must carry teacher logits. With `alpha = 0` labels are never read.
pub fn train_distill(
    state: &mut ModelState,
    labeled: &[Example],
    unlabeled: &[Example],
    cfg: &TrainConfig,
    opts: TrainOptions<'_>,
) -> Result<RunLedger> {
    cfg.validate()?;
    if cfg.mode == TrainMode::DirectCe {
        return Err(Error::Config("train_distill needs mode distill_mae or mixed".into()));
    }
    let n_classes = state.config.n_classes;
    for ex in labeled.iter().chain(unlabeled) {
        if ex.teacher_logits.is_none() {
            return Err(Error::MissingInput(format!("no teacher logits for example {}", ex.id)));
        }
        if cfg.mode == TrainMode::DistillMae || cfg.alpha == 0.0 {
            let unlabeled_view = Example {
                label: None,
                ..ex.clone()
            };
            unlabeled_view.validate(n_classes)?;
        } else {
            ex.validate(n_classes)?;
        }
    }
    let refs: Vec<&Example> = labeled.iter().chain(unlabeled).collect();
    let mut ledger = RunLedger::new(state, cfg, refs.len());
    let expected = labeled.len() * cfg.unlabeled_ratio;
    let deviation = (unlabeled.len() as f64 - expected as f64).abs();
    if deviation > 0.2 * expected as f64 || (expected == 0 && !unlabeled.is_empty()) {
        ledger.warn(format!(
            "unlabeled pool has {} examples, expected about {expected} ({}x {} labeled)",
            unlabeled.len(),
            cfg.unlabeled_ratio,
            labeled.len()
        ));
    }
    run_epochs(state, &refs, cfg, opts, ledger)
}

//! Effective run configuration: JSON file with flat dotted keys, then
//! `--set key=value` overrides, then `--seed`.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use blendcnn_core::bench::ThroughputConfig;
use blendcnn_core::distill::TrainConfig;
use blendcnn_core::models::ModelConfig;
use blendcnn_core::synth::SynthConfig;
use blendcnn_core::text::{CsvSchema, DEFAULT_VOCAB_CAP};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::ConfigError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub train_csv: Option<PathBuf>,
    pub test_csv: Option<PathBuf>,
    pub schema: CsvSchema,
    pub n_classes: usize,
    /// Labeled examples per class; 0 takes every row.
    pub per_class: usize,
    pub unlabeled_ratio: usize,
    pub sample_seed: u64,
    /// Labeled pool per class for the surrogate teacher; 0 takes every row.
    pub teacher_per_class: usize,
    /// Stratified test subset size; 0 takes every row.
    pub test_size: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            train_csv: None,
            test_csv: None,
            schema: CsvSchema::default(),
            n_classes: 4,
            per_class: 100,
            unlabeled_ratio: 10,
            sample_seed: 17,
            teacher_per_class: 0,
            test_size: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VocabConfig {
    pub cap: usize,
    pub path: Option<PathBuf>,
}

impl Default for VocabConfig {
    fn default() -> Self {
        Self {
            cap: DEFAULT_VOCAB_CAP,
            path: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GloveConfig {
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub throughput: ThroughputConfig,
    /// Architectures benchmarked when no checkpoint is given.
    pub models: Vec<String>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            throughput: ThroughputConfig::default(),
            models: vec!["blendcnn-3".into(), "blendcnn-8".into(), "kimcnn".into()],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub data: DataConfig,
    pub vocab: VocabConfig,
    pub glove: GloveConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub bench: BenchConfig,
    pub synth: SynthConfig,
}

/// Inserts `value` at the dotted `key`, creating objects along the way.
fn insert_dotted(root: &mut Map<String, Value>, key: &str, value: Value) -> Result<()> {
    let mut parts = key.split('.').peekable();
    let mut node = root;
    while let Some(part) = parts.next() {
        if part.is_empty() {
            bail!(ConfigError(format!("empty segment in key {key:?}")));
        }
        if parts.peek().is_none() {
            merge_into(node, part, value);
            return Ok(());
        }
        let slot = node
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
        if !slot.is_object() {
            *slot = Value::Object(Map::new());
        }
        node = slot.as_object_mut().expect("just made an object");
    }
    Ok(())
}

fn merge_into(node: &mut Map<String, Value>, key: &str, value: Value) {
    match (node.get_mut(key), value) {
        (Some(Value::Object(existing)), Value::Object(incoming)) => {
            for (k, v) in incoming {
                merge_into(existing, &k, v);
            }
        }
        (_, value) => {
            node.insert(key.to_string(), value);
        }
    }
}

/// Flattens nested objects into dotted keys.
pub fn flatten(value: &Value) -> Map<String, Value> {
    fn walk(prefix: &str, v: &Value, out: &mut Map<String, Value>) {
        match v {
            Value::Object(m) if !m.is_empty() => {
                for (k, child) in m {
                    let key = if prefix.is_empty() {
                        k.clone()
                    } else {
                        format!("{prefix}.{k}")
                    };
                    walk(&key, child, out);
                }
            }
            other => {
                out.insert(prefix.to_string(), other.clone());
            }
        }
    }
    let mut out = Map::new();
    walk("", value, &mut out);
    out
}

fn parse_override(raw: &str) -> Result<(String, Value)> {
    let (key, value) = raw
        .split_once('=')
        .ok_or_else(|| ConfigError(format!("override {raw:?} is not key=value")))?;
    let value = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()));
    Ok((key.trim().to_string(), value))
}

pub fn resolve(file: Option<&Path>, overrides: &[String], seed: Option<u64>) -> Result<RunConfig> {
    let mut root = Map::new();
    if let Some(path) = file {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let parsed: Value = serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        let Value::Object(map) = parsed else {
            bail!(ConfigError(format!("{}: config must be a JSON object", path.display())));
        };
        for (k, v) in map {
            insert_dotted(&mut root, &k, v)?;
        }
    }
    for raw in overrides {
        let (k, v) = parse_override(raw)?;
        insert_dotted(&mut root, &k, v)?;
    }
    if let Some(seed) = seed {
        insert_dotted(&mut root, "seed", Value::from(seed))?;
    }
    let mut cfg: RunConfig =
        serde_json::from_value(Value::Object(root)).map_err(|e| ConfigError(format!("config: {e}")))?;
    cfg.train.seed = cfg.seed;
    cfg.model.n_classes = cfg.data.n_classes;
    Ok(cfg)
}

/// Writes the effective config as flat dotted keys.
pub fn echo(cfg: &RunConfig, out_dir: &Path) -> Result<PathBuf> {
    let flat = flatten(&serde_json::to_value(cfg)?);
    let path = out_dir.join("effective_config.json");
    std::fs::write(&path, serde_json::to_string_pretty(&Value::Object(flat))? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

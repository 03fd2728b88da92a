//! CSV ingestion, seeded splits and encoded examples.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tokenize::tokenize;
use super::vocab::{Vocabulary, PAD_ID};
use crate::error::{Error, Result};

/// Column layout of a classification CSV without a header row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CsvSchema {
    pub label_col: usize,
    pub text_cols: Vec<usize>,
    /// Label of the first class in the file: 0 or 1.
    pub label_base: usize,
}

impl Default for CsvSchema {
    /// AG News layout: `"class","title","description"`, classes from 1.
    fn default() -> Self {
        Self {
            label_col: 0,
            text_cols: vec![1, 2],
            label_base: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRecord {
    pub id: String,
    pub text: String,
    pub label: usize,
}

pub fn load_csv_dataset(path: &Path, schema: &CsvSchema) -> Result<Vec<RawRecord>> {
    if schema.label_base > 1 {
        return Err(Error::Config(format!(
            "label_base must be 0 or 1, got {}",
            schema.label_base
        )));
    }
    let fname = path
        .file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_error(path, 0, e))?;
    let mut out = Vec::new();
    for (n, row) in reader.records().enumerate() {
        let rowno = n + 1;
        let row = row.map_err(|e| csv_error(path, rowno, e))?;
        let field = |col: usize| {
            row.get(col)
                .ok_or_else(|| Error::parse(path, rowno, format!("column {col} out of range ({} fields)", row.len())))
        };
        let raw_label = field(schema.label_col)?;
        let label = raw_label
            .trim()
            .parse::<usize>()
            .ok()
            .and_then(|l| l.checked_sub(schema.label_base))
            .ok_or_else(|| Error::parse(path, rowno, format!("bad label {raw_label:?}")))?;
        let parts = schema.text_cols.iter().map(|&c| field(c)).collect::<Result<Vec<_>>>()?;
        out.push(RawRecord {
            id: format!("{fname}:{rowno}"),
            text: parts.join(" "),
            label,
        });
    }
    Ok(out)
}

fn csv_error(path: &Path, row: usize, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::parse(path, row, format!("{other:?}")),
    }
}

/// An encoded sample. Ids past `valid_len` are PAD.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub id: String,
    pub token_ids: Vec<u32>,
    pub valid_len: usize,
    pub label: Option<usize>,
    pub teacher_logits: Option<Vec<f64>>,
}

impl Example {
    pub fn validate(&self, n_classes: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(format!("example {}: {msg}", self.id)));
        if self.valid_len > self.token_ids.len() {
            return bad(format!(
                "valid_len {} exceeds length {}",
                self.valid_len,
                self.token_ids.len()
            ));
        }
        if self.token_ids[self.valid_len..].iter().any(|&t| t != PAD_ID) {
            return bad("non-PAD id past valid_len".into());
        }
        if let Some(l) = self.label {
            if l >= n_classes {
                return bad(format!("label {l} out of range for {n_classes} classes"));
            }
        }
        if let Some(t) = &self.teacher_logits {
            if t.len() != n_classes {
                return bad(format!("{} teacher logits for {n_classes} classes", t.len()));
            }
            if t.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("teacher logits of {}", self.id)));
            }
        }
        Ok(())
    }
}

/// Tokenizes and encodes records. Labels are dropped when `keep_labels` is false.
pub fn encode_records(records: &[RawRecord], vocab: &Vocabulary, seq_len: usize, keep_labels: bool) -> Vec<Example> {
    records
        .iter()
        .map(|r| {
            let (token_ids, valid_len) = vocab.encode(&tokenize(&r.text), seq_len);
            Example {
                id: r.id.clone(),
                token_ids,
                valid_len,
                label: keep_labels.then_some(r.label),
                teacher_logits: None,
            }
        })
        .collect()
}

/// Indices of `per_class` records from each class, drawn with `seed`,
/// returned in file order.
pub fn stratified_sample(records: &[RawRecord], n_classes: usize, per_class: usize, seed: u64) -> Result<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = Vec::with_capacity(n_classes * per_class);
    for class in 0..n_classes {
        let mut members: Vec<usize> = (0..records.len()).filter(|&i| records[i].label == class).collect();
        if members.len() < per_class {
            return Err(Error::InvalidArgument(format!(
                "class {class} has {} records, {per_class} requested",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        picked.extend_from_slice(&members[..per_class]);
    }
    picked.sort_unstable();
    Ok(picked)
}

/// Labeled / unlabeled partition of a training file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub labeled: Vec<usize>,
    pub unlabeled: Vec<usize>,
}

/// Stratified labeled sample plus `unlabeled_ratio × |labeled|` further
/// records drawn uniformly from the remainder.
pub fn split_labeled_unlabeled(
    records: &[RawRecord],
    n_classes: usize,
    per_class: usize,
    unlabeled_ratio: usize,
    seed: u64,
) -> Result<Split> {
    let labeled = stratified_sample(records, n_classes, per_class, seed)?;
    let mut taken = vec![false; records.len()];
    for &i in &labeled {
        taken[i] = true;
    }
    let mut rest: Vec<usize> = (0..records.len()).filter(|&i| !taken[i]).collect();
    let want = labeled.len() * unlabeled_ratio;
    if rest.len() < want {
        log::warn!("only {} records left for an unlabeled pool of {want}", rest.len());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_u64.rotate_left(32));
    rest.shuffle(&mut rng);
    rest.truncate(want);
    rest.sort_unstable();
    Ok(Split {
        labeled,
        unlabeled: rest,
    })
}

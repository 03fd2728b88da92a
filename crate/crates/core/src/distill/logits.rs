//! Teacher logits exchanged as JSON Lines: `{"id": "...", "logits": [...]}`.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::ModelState;
use crate::text::Example;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitRecord {
    pub id: String,
    pub logits: Vec<f64>,
}

/// Eval-mode logits for each example, in input order.
pub fn infer_logits(state: &ModelState, examples: &[Example], batch_size: usize) -> Result<Vec<LogitRecord>> {
    if batch_size == 0 {
        return Err(Error::InvalidArgument("batch_size must be positive".into()));
    }
    if let Some(ex) = examples.iter().find(|e| e.token_ids.len() != state.config.seq_len) {
        return Err(Error::InvalidArgument(format!(
            "example {} is encoded to length {}, model expects {}",
            ex.id,
            ex.token_ids.len(),
            state.config.seq_len
        )));
    }
    let mut out = Vec::with_capacity(examples.len());
    for chunk in examples.chunks(batch_size) {
        let batch: Vec<&Example> = chunk.iter().collect();
        let logits = state.predict(&batch)?;
        for (b, ex) in chunk.iter().enumerate() {
            out.push(LogitRecord {
                id: ex.id.clone(),
                logits: logits.row(b).to_vec(),
            });
        }
    }
    Ok(out)
}

pub fn write_logits_jsonl(path: &Path, records: &[LogitRecord]) -> Result<()> {
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, r).expect("logit record serializes");
        buf.write_all(b"\n").expect("write to Vec");
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_logits_jsonl(path: &Path) -> Result<Vec<LogitRecord>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out: Vec<LogitRecord> = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: LogitRecord = serde_json::from_str(&line).map_err(|e| Error::parse(path, n + 1, e.to_string()))?;
        if rec.logits.iter().any(|v| !v.is_finite()) {
            return Err(Error::parse(path, n + 1, "non-finite logit"));
        }
        if let Some(first) = out.first() {
            if first.logits.len() != rec.logits.len() {
                return Err(Error::parse(
                    path,
                    n + 1,
                    format!(
                        "{} logits, earlier records have {}",
                        rec.logits.len(),
                        first.logits.len()
                    ),
                ));
            }
        }
        out.push(rec);
    }
    Ok(out)
}

/// Sets `teacher_logits` on every example from `records` (matched by id).
/// Every example must be covered; ids may not repeat.
pub fn attach_logits(examples: &mut [Example], records: &[LogitRecord], n_classes: usize) -> Result<()> {
    let mut by_id: HashMap<&str, &[f64]> = HashMap::with_capacity(records.len());
    for r in records {
        if r.logits.len() != n_classes {
            return Err(Error::InvalidArgument(format!(
                "teacher record {} has {} logits for {n_classes} classes",
                r.id,
                r.logits.len()
            )));
        }
        if by_id.insert(&r.id, &r.logits).is_some() {
            return Err(Error::InvalidArgument(format!("duplicate teacher record {}", r.id)));
        }
    }
    for ex in examples.iter_mut() {
        let logits = by_id
            .get(ex.id.as_str())
            .ok_or_else(|| Error::MissingInput(format!("no teacher logits for example {}", ex.id)))?;
        ex.teacher_logits = Some(logits.to_vec());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(id: &str) -> Example {
        Example {
            id: id.into(),
            token_ids: vec![2, 0],
            valid_len: 1,
            label: None,
            teacher_logits: None,
        }
    }

    #[test]
    fn jsonl_round_trip_and_format() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.jsonl");
        let recs = vec![
            LogitRecord {
                id: "a:1".into(),
                logits: vec![0.1, -2.5],
            },
            LogitRecord {
                id: "a:2".into(),
                logits: vec![1e-17, 3.0],
            },
        ];
        write_logits_jsonl(&p, &recs).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().next(), Some(r#"{"id":"a:1","logits":[0.1,-2.5]}"#));
        assert_eq!(read_logits_jsonl(&p).unwrap(), recs);
    }

    #[test]
    fn malformed_jsonl_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.jsonl");
        std::fs::write(&p, "{\"id\":\"a\",\"logits\":[1,2]}\n{\"id\":\"b\",\"logits\":[1]}\n").unwrap();
        assert!(matches!(read_logits_jsonl(&p), Err(Error::Parse { line: 2, .. })));
        std::fs::write(&p, "not json\n").unwrap();
        assert!(matches!(read_logits_jsonl(&p), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn attach_requires_full_coverage() {
        let recs = vec![LogitRecord {
            id: "a".into(),
            logits: vec![1.0, 2.0],
        }];
        let mut exs = vec![ex("a")];
        attach_logits(&mut exs, &recs, 2).unwrap();
        assert_eq!(exs[0].teacher_logits.as_deref(), Some(&[1.0, 2.0][..]));
        let mut exs = vec![ex("a"), ex("b")];
        assert!(matches!(attach_logits(&mut exs, &recs, 2), Err(Error::MissingInput(_))));
        let dup = vec![recs[0].clone(), recs[0].clone()];
        assert!(attach_logits(&mut [ex("a")], &dup, 2).is_err());
    }
}

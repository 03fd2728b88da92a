use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::ModelState;
use crate::numerics::argmax;
use crate::text::Example;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub predicted: usize,
    pub gold: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    /// `confusion[gold][predicted]`
    pub confusion: Vec<Vec<usize>>,
    pub predictions: Vec<Prediction>,
}

/// Scores predictions; ties in the logits go to the lowest class index.
pub fn score(logits_rows: &[Vec<f64>], examples: &[Example], n_classes: usize) -> Result<Evaluation> {
    if examples.is_empty() {
        return Err(Error::InvalidArgument("empty test set".into()));
    }
    let mut confusion = vec![vec![0usize; n_classes]; n_classes];
    let mut predictions = Vec::with_capacity(examples.len());
    let mut correct = 0usize;
    for (row, ex) in logits_rows.iter().zip(examples) {
        let gold = ex
            .label
            .ok_or_else(|| Error::InvalidArgument(format!("test example {} has no label", ex.id)))?;
        if gold >= n_classes {
            return Err(Error::InvalidArgument(format!(
                "label {gold} out of range in {}",
                ex.id
            )));
        }
        let predicted = argmax(row);
        confusion[gold][predicted] += 1;
        correct += usize::from(predicted == gold);
        predictions.push(Prediction {
            id: ex.id.clone(),
            predicted,
            gold,
        });
    }
    Ok(Evaluation {
        accuracy: correct as f64 / examples.len() as f64,
        confusion,
        predictions,
    })
}

pub fn evaluate(state: &ModelState, test_set: &[Example], batch_size: usize) -> Result<Evaluation> {
    if test_set.is_empty() {
        return Err(Error::InvalidArgument("empty test set".into()));
    }
    let mut rows = Vec::with_capacity(test_set.len());
    for chunk in test_set.chunks(batch_size.max(1)) {
        let batch: Vec<&Example> = chunk.iter().collect();
        let logits = state.predict(&batch)?;
        rows.extend((0..chunk.len()).map(|b| logits.row(b).to_vec()));
    }
    score(&rows, test_set, state.config.n_classes)
}

/// Writes `id,predicted,gold` with a header row.
pub fn write_predictions_csv(path: &Path, predictions: &[Prediction]) -> Result<()> {
    let io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::InvalidArgument(format!("{other:?}")),
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    for p in predictions {
        w.serialize(p).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_predictions_csv(path: &Path) -> Result<Vec<Prediction>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::parse(path, 0, e.to_string()))?;
    r.deserialize()
        .enumerate()
        .map(|(i, row)| row.map_err(|e| Error::parse(path, i + 2, e.to_string())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labeled(n_classes: usize, per_class: usize) -> Vec<Example> {
        (0..n_classes * per_class)
            .map(|i| Example {
                id: format!("t:{i}"),
                token_ids: vec![2],
                valid_len: 1,
                label: Some(i % n_classes),
                teacher_logits: None,
            })
            .collect()
    }

    #[test]
    fn constant_predictor_on_balanced_set() {
        let exs = labeled(4, 25);
        let rows = vec![vec![1.0, 0.0, 0.0, 0.0]; exs.len()];
        let ev = score(&rows, &exs, 4).unwrap();
        assert_eq!(ev.accuracy, 0.25);
        for (c, row) in ev.confusion.iter().enumerate() {
            assert_eq!(row.iter().sum::<usize>(), 25);
            assert_eq!(row[0], 25, "class {c}");
        }
    }

    #[test]
    fn one_hot_logits_are_perfect() {
        let exs = labeled(3, 5);
        let rows: Vec<Vec<f64>> = exs
            .iter()
            .map(|e| (0..3).map(|c| if Some(c) == e.label { 10.0 } else { 0.0 }).collect())
            .collect();
        assert_eq!(score(&rows, &exs, 3).unwrap().accuracy, 1.0);
    }

    #[test]
    fn ties_resolve_to_lowest_class() {
        let exs = labeled(2, 1);
        let ev = score(&[vec![0.0, 0.0], vec![0.0, 0.0]], &exs, 2).unwrap();
        assert_eq!(ev.predictions[1].predicted, 0);
    }

    #[test]
    fn empty_set_rejected() {
        assert!(score(&[], &[], 2).is_err());
    }

    #[test]
    fn dump_recount_matches() {
        let exs = labeled(3, 4);
        let rows: Vec<Vec<f64>> = (0..exs.len()).map(|i| vec![(i % 2) as f64, 0.5, 0.2]).collect();
        let ev = score(&rows, &exs, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("pred.csv");
        write_predictions_csv(&p, &ev.predictions).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("id,predicted,gold\n"));
        let back = read_predictions_csv(&p).unwrap();
        let recount = back.iter().filter(|p| p.predicted == p.gold).count() as f64 / back.len() as f64;
        assert_eq!(recount, ev.accuracy);
    }
}

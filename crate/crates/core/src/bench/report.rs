//! Parameter-count and throughput tables, with published reference figures
//! alongside the measured ones.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::throughput::ThroughputResult;
use crate::error::{Error, Result};
use crate::models::{param_count, ModelConfig, ModelKind};

/// Published figures for a model (GPU timings; parameter counts at a
/// 20,000-word vocabulary).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaperReference {
    pub total_parameters: u64,
    pub sentences_per_second: f64,
}

pub const TEACHER_REFERENCE: PaperReference = PaperReference {
    total_parameters: 116_534_790,
    sentences_per_second: 11.76,
};

/// Reference row for the published configurations, if `config` is one.
pub fn paper_reference(config: &ModelConfig) -> Option<PaperReference> {
    match (config.kind, config.n_layers) {
        (ModelKind::BlendCnn, 3) => Some(PaperReference {
            total_parameters: 2_975_236,
            sentences_per_second: 3676.47,
        }),
        (ModelKind::BlendCnn, 8) => Some(PaperReference {
            total_parameters: 3_617_426,
            sentences_per_second: 2392.34,
        }),
        (ModelKind::KimCnn, _) => Some(PaperReference {
            total_parameters: 2_124_824,
            sentences_per_second: 3154.57,
        }),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model: String,
    pub total_parameters: usize,
    pub sentences_per_second: Option<f64>,
    pub paper_total_parameters: Option<u64>,
    pub paper_sentences_per_second: Option<f64>,
}

impl ReportRow {
    pub fn new(config: &ModelConfig, throughput: Option<&ThroughputResult>) -> Self {
        let reference = paper_reference(config);
        Self {
            model: config.name(),
            total_parameters: param_count(config).total,
            sentences_per_second: throughput.map(|t| t.sentences_per_second),
            paper_total_parameters: reference.map(|r| r.total_parameters),
            paper_sentences_per_second: reference.map(|r| r.sentences_per_second),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub rows: Vec<ReportRow>,
    pub hardware: Option<String>,
}

fn thousands(n: u64) -> String {
    let s = n.to_string();
    let mut out = String::new();
    for (i, ch) in s.chars().enumerate() {
        if i > 0 && (s.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

fn opt<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map(f).unwrap_or_default()
}

pub fn report(rows: Vec<ReportRow>, hardware: Option<String>) -> Report {
    Report { rows, hardware }
}

impl Report {
    pub fn to_text(&self) -> String {
        let header = [
            "model",
            "total parameters",
            "sentences/s",
            "paper-reported parameters",
            "paper-reported sentences/s",
        ];
        let cells: Vec<[String; 5]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.model.clone(),
                    thousands(r.total_parameters as u64),
                    opt(r.sentences_per_second, |v| format!("{v:.2}")),
                    opt(r.paper_total_parameters, thousands),
                    opt(r.paper_sentences_per_second, |v| format!("{v:.2}")),
                ]
            })
            .collect();
        let widths: Vec<usize> = (0..5)
            .map(|c| cells.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap())
            .collect();
        let mut out = String::new();
        let line = |out: &mut String, row: [&str; 5]| {
            let _ = write!(out, "{:<w$}", row[0], w = widths[0]);
            for c in 1..5 {
                let _ = write!(out, "  {:>w$}", row[c], w = widths[c]);
            }
            out.push('\n');
        };
        line(&mut out, header);
        let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
        line(&mut out, [&rule[0], &rule[1], &rule[2], &rule[3], &rule[4]]);
        for r in &cells {
            line(&mut out, [&r[0], &r[1], &r[2], &r[3], &r[4]]);
        }
        if let Some(hw) = &self.hardware {
            let _ = writeln!(out, "\nmeasured on: {hw}");
        }
        let t = TEACHER_REFERENCE;
        let _ = writeln!(
            out,
            "paper-reported teacher: {} parameters, {:.2} sentences/s (GPU); \
             claimed 3-layer BlendCNN ratios: 39x fewer parameters, 300x faster inference (not reproduced)",
            thousands(t.total_parameters),
            t.sentences_per_second
        );
        out
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r).expect("row serializes");
        }
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 csv")
    }

    pub fn rows_from_csv(text: &str) -> Result<Vec<ReportRow>> {
        csv::Reader::from_reader(text.as_bytes())
            .deserialize()
            .enumerate()
            .map(|(i, r)| r.map_err(|e| Error::parse("<report>", i + 2, e.to_string())))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_layer_row_carries_reference_count() {
        let row = ReportRow::new(&ModelConfig::blendcnn(3, 20_000, 4), None);
        assert_eq!(row.total_parameters, 2_180_804);
        assert_eq!(row.paper_total_parameters, Some(2_975_236));
        let text = report(vec![row], None).to_text();
        assert!(text.contains("2,975,236") && text.contains("2,180,804"), "{text}");
        assert!(text.contains("paper-reported"));
    }

    #[test]
    fn unmatched_config_has_empty_reference() {
        let row = ReportRow::new(&ModelConfig::blendcnn(5, 100, 2), None);
        assert_eq!(row.paper_total_parameters, None);
        let csv = report(vec![row], None).to_csv();
        assert!(csv.lines().nth(1).unwrap().ends_with(",,,"), "{csv}");
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![
            ReportRow {
                sentences_per_second: Some(1234.5678),
                ..ReportRow::new(&ModelConfig::blendcnn(8, 20_000, 4), None)
            },
            ReportRow::new(&ModelConfig::kimcnn(20_000, 4), None),
        ];
        let csv = report(rows.clone(), None).to_csv();
        assert!(csv.starts_with(
            "model,total_parameters,sentences_per_second,paper_total_parameters,paper_sentences_per_second\n"
        ));
        assert_eq!(Report::rows_from_csv(&csv).unwrap(), rows);
    }

    #[test]
    fn thousands_separator() {
        assert_eq!(thousands(0), "0");
        assert_eq!(thousands(999), "999");
        assert_eq!(thousands(2_975_236), "2,975,236");
    }
}

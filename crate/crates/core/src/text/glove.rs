//! GloVe text-format embedding loader.

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::vocab::{Vocabulary, PAD_ID};
use crate::error::{Error, Result};
use crate::numerics::Tensor;

pub const DEFAULT_EMBED_DIM: usize = 100;
const INIT_RANGE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSource {
    Pretrained,
    RandomInit,
    FrozenZero,
}

/// `[vocab_size, embed_dim]` embedding table. Row 0 (PAD) is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub values: Tensor,
    pub sources: Vec<RowSource>,
}

impl EmbeddingMatrix {
    /// Every row uniform in ±0.05 from `seed`, except the zero PAD row.
    pub fn random(vocab_size: usize, embed_dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values = Tensor::from_fn(&[vocab_size, embed_dim], |_| rng.random_range(-INIT_RANGE..INIT_RANGE));
        values.row_mut(PAD_ID as usize).fill(0.0);
        let mut sources = vec![RowSource::RandomInit; vocab_size];
        sources[PAD_ID as usize] = RowSource::FrozenZero;
        Self { values, sources }
    }

    pub fn vocab_size(&self) -> usize {
        self.values.dim(0)
    }

    pub fn embed_dim(&self) -> usize {
        self.values.dim(1)
    }

    /// Fraction of non-reserved rows taken from the pretrained file.
    pub fn coverage(&self) -> f64 {
        let eligible = self.vocab_size().saturating_sub(2);
        if eligible == 0 {
            return 0.0;
        }
        let hits = self.sources[2..]
            .iter()
            .filter(|&&s| s == RowSource::Pretrained)
            .count();
        hits as f64 / eligible as f64
    }
}

/// Reads `token v1 … vD` lines. Vocabulary tokens absent from the file keep
/// their seeded random initialisation; the first occurrence of a token wins.
pub fn load_glove(path: &Path, vocab: &Vocabulary, embed_dim: usize, seed: u64) -> Result<EmbeddingMatrix> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut matrix = EmbeddingMatrix::random(vocab.len(), embed_dim, seed);
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let lineno = n + 1;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else { continue };
        let values: Vec<&str> = fields.collect();
        if values.len() != embed_dim {
            if lineno == 1 {
                return Err(Error::Config(format!(
                    "{}: embeddings have dimension {}, expected {embed_dim}",
                    path.display(),
                    values.len()
                )));
            }
            return Err(Error::parse(
                path,
                lineno,
                format!("expected {} fields, found {}", embed_dim + 1, values.len() + 1),
            ));
        }
        let Some(id) = vocab.get(token) else { continue };
        let id = id as usize;
        if id == PAD_ID as usize || matrix.sources[id] == RowSource::Pretrained {
            continue;
        }
        let row = matrix.values.row_mut(id);
        for (slot, raw) in row.iter_mut().zip(&values) {
            *slot = raw
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(path, lineno, format!("non-numeric value {raw:?}")))?;
        }
        matrix.sources[id] = RowSource::Pretrained;
    }
    log::info!(
        "loaded embeddings from {}: coverage {:.3}",
        path.display(),
        matrix.coverage()
    );
    Ok(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> Vocabulary {
        Vocabulary::build(vec![vec!["the", "cat", "the"]], 10).unwrap()
    }

    fn write(dir: &tempfile::TempDir, body: &str) -> std::path::PathBuf {
        let p = dir.path().join("glove.txt");
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn full_coverage_reads_values_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let the: Vec<String> = (0..100).map(|i| format!("{}", i as f64 * 0.01 - 0.3)).collect();
        let cat: Vec<String> = (0..100).map(|i| format!("{}", -(i as f64) * 0.5)).collect();
        let body = format!("the {}\ncat {}\n", the.join(" "), cat.join(" "));
        let m = load_glove(&write(&dir, &body), &vocab(), 100, 3).unwrap();
        assert_eq!(m.coverage(), 1.0);
        let want: Vec<f64> = the.iter().map(|s| s.parse().unwrap()).collect();
        assert_eq!(m.values.row(vocab().id("the") as usize), &want[..]);
        assert!(m.values.row(0).iter().all(|&v| v == 0.0));
        assert_eq!(m.sources[0], RowSource::FrozenZero);
    }

    #[test]
    fn empty_file_is_all_random() {
        let dir = tempfile::tempdir().unwrap();
        let m = load_glove(&write(&dir, ""), &vocab(), 4, 9).unwrap();
        assert_eq!(m.coverage(), 0.0);
        assert_eq!(m, EmbeddingMatrix::random(4, 4, 9));
        assert!(m.values.data()[4..].iter().all(|v| v.abs() < 0.05 && *v != 0.0));
    }

    #[test]
    fn malformed_lines_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_glove(&write(&dir, "the 1 2\ncat 1\n"), &vocab(), 2, 0).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = load_glove(&write(&dir, "the 1 2\ncat 1 x\n"), &vocab(), 2, 0).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_glove(&write(&dir, "the 1 2 3\n"), &vocab(), 2, 0).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }
}

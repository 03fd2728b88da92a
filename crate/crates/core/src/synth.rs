//! Synthetic topic-classification corpus in the AG News CSV layout
//! (`"class","title","description"`, classes numbered from 1).
//!
//! Each class owns a lexicon of topic words drawn with Zipfian frequencies;
//! documents mix those with shared filler words and a few topic words
//! borrowed from other classes. A small labeled sample sees only the head
//! of each topic lexicon, while a large pool covers the tail too.

use std::fs;
use std::path::{Path, PathBuf};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_classes: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub topic_words: usize,
    pub shared_words: usize,
    pub zipf_exponent: f64,
    pub min_len: usize,
    pub max_len: usize,
    /// Probability that a token is a topic word of the document's class.
    pub topic_rate: f64,
    /// Probability that a token is a topic word of some other class.
    pub cross_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_classes: 4,
            train_per_class: 10_000,
            test_per_class: 500,
            topic_words: 800,
            shared_words: 400,
            zipf_exponent: 1.0,
            min_len: 8,
            max_len: 24,
            topic_rate: 0.2,
            cross_rate: 0.05,
            seed: 2018,
        }
    }
}

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

/// Distinct pronounceable pseudo-word for each index.
fn word(index: usize) -> String {
    let n = CONSONANTS.len() * VOWELS.len();
    let mut i = index + n;
    let mut out = Vec::new();
    while i > 0 {
        let s = i % n;
        out.push(CONSONANTS[s / VOWELS.len()]);
        out.push(VOWELS[s % VOWELS.len()]);
        i /= n;
    }
    String::from_utf8(out).expect("ascii")
}

struct Generator {
    cfg: SynthConfig,
    rank: WeightedIndex<f64>,
    shared: WeightedIndex<f64>,
}

impl Generator {
    fn new(cfg: &SynthConfig) -> Result<Self> {
        let zipf = |n: usize| {
            WeightedIndex::new((1..=n).map(|r| (r as f64).powf(-cfg.zipf_exponent)))
                .map_err(|e| Error::Config(format!("synthetic corpus weights: {e}")))
        };
        Ok(Self {
            cfg: cfg.clone(),
            rank: zipf(cfg.topic_words)?,
            shared: zipf(cfg.shared_words)?,
        })
    }

    fn topic_word(&self, class: usize, rank: usize) -> String {
        word(self.cfg.shared_words + class * self.cfg.topic_words + rank)
    }

    fn document(&self, class: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
        let len = rng.random_range(self.cfg.min_len..=self.cfg.max_len);
        (0..len)
            .map(|_| {
                let u: f64 = rng.random();
                if u < self.cfg.topic_rate {
                    self.topic_word(class, self.rank.sample(rng))
                } else if u < self.cfg.topic_rate + self.cfg.cross_rate && self.cfg.n_classes > 1 {
                    let other = (class + rng.random_range(1..self.cfg.n_classes)) % self.cfg.n_classes;
                    self.topic_word(other, self.rank.sample(rng))
                } else {
                    word(self.shared.sample(rng))
                }
            })
            .collect()
    }

    fn rows(&self, per_class: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, String, String)> {
        let mut rows = Vec::with_capacity(per_class * self.cfg.n_classes);
        for class in 0..self.cfg.n_classes {
            for _ in 0..per_class {
                let doc = self.document(class, rng);
                let split = rng.random_range(2..=5).min(doc.len() - 1);
                let mut title = doc[..split].join(" ");
                if let Some(first) = title.get_mut(0..1) {
                    first.make_ascii_uppercase();
                }
                rows.push((class + 1, title, format!("{}.", doc[split..].join(" "))));
            }
        }
        rows.shuffle(rng);
        rows
    }
}

fn write_rows(path: &Path, rows: &[(usize, String, String)]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .quote_style(csv::QuoteStyle::Always)
        .from_path(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    for (label, title, body) in rows {
        w.write_record([label.to_string().as_str(), title, body])
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `train.csv` and `test.csv` into `dir` and returns their paths.
pub fn write_synthetic_corpus(dir: &Path, cfg: &SynthConfig) -> Result<(PathBuf, PathBuf)> {
    if cfg.n_classes == 0 || cfg.topic_words == 0 || cfg.shared_words == 0 {
        return Err(Error::Config("synthetic corpus needs classes and lexicons".into()));
    }
    if cfg.min_len < 3 || cfg.min_len > cfg.max_len {
        return Err(Error::Config(
            "synthetic document lengths need 3 <= min_len <= max_len".into(),
        ));
    }
    if !(0.0..=1.0).contains(&(cfg.topic_rate + cfg.cross_rate)) {
        return Err(Error::Config("topic_rate + cross_rate must lie in [0, 1]".into()));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let generator = Generator::new(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let train = dir.join("train.csv");
    let test = dir.join("test.csv");
    write_rows(&train, &generator.rows(cfg.train_per_class, &mut rng))?;
    write_rows(&test, &generator.rows(cfg.test_per_class, &mut rng))?;
    Ok((train, test))
}

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";
pub const DEFAULT_VOCAB_CAP: usize = 20_000;

/// Token ↔ id mapping with `0 = PAD` and `1 = UNK`; ids are dense.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    fn reserved() -> Self {
        let mut v = Self {
            tokens: Vec::new(),
            index: HashMap::new(),
        };
        v.push(PAD_TOKEN.to_string());
        v.push(UNK_TOKEN.to_string());
        v
    }

    fn push(&mut self, token: String) {
        self.index.insert(token.clone(), self.tokens.len() as u32);
        self.tokens.push(token);
    }

    /// Keeps the `cap − 2` most frequent tokens. Ties go to the
    /// lexicographically smaller token, which also receives the lower id.
    pub fn build<I, D, S>(corpus: I, cap: usize) -> Result<Self>
    where
        I: IntoIterator<Item = D>,
        D: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        if cap < 2 {
            return Err(Error::InvalidArgument(format!(
                "vocabulary cap must be at least 2, got {cap}"
            )));
        }
        let mut counts: HashMap<String, u64> = HashMap::new();
        for doc in corpus {
            for tok in doc {
                let tok = tok.as_ref();
                if tok == PAD_TOKEN || tok == UNK_TOKEN {
                    continue;
                }
                *counts.entry(tok.to_string()).or_default() += 1;
            }
        }
        if counts.is_empty() {
            log::warn!("empty corpus: vocabulary holds only the reserved tokens");
        }
        let mut ranked: Vec<(String, u64)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let mut vocab = Self::reserved();
        for (tok, _) in ranked.into_iter().take(cap - 2) {
            vocab.push(tok);
        }
        Ok(vocab)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Id of `token`, or `UNK_ID` when out of vocabulary.
    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn get(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Maps to ids, keeps the first `seq_len` tokens and right-pads with PAD.
    /// Returns the ids and the number of real tokens.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S], seq_len: usize) -> (Vec<u32>, usize) {
        let valid = tokens.len().min(seq_len);
        let mut ids: Vec<u32> = tokens[..valid].iter().map(|t| self.id(t.as_ref())).collect();
        ids.resize(seq_len, PAD_ID);
        (ids, valid)
    }

    /// Writes `token<TAB>id` lines in id order.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        for (id, tok) in self.tokens.iter().enumerate() {
            writeln!(out, "{tok}\t{id}").expect("write to Vec");
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut vocab = Self {
            tokens: Vec::new(),
            index: HashMap::new(),
        };
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let lineno = n + 1;
            let (tok, id) = line
                .rsplit_once('\t')
                .ok_or_else(|| Error::parse(path, lineno, "expected token<TAB>id"))?;
            let id: usize = id
                .parse()
                .map_err(|_| Error::parse(path, lineno, format!("bad id {id:?}")))?;
            if id != vocab.tokens.len() {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("ids must be dense, expected {}", vocab.tokens.len()),
                ));
            }
            if vocab.index.contains_key(tok) {
                return Err(Error::parse(path, lineno, format!("duplicate token {tok:?}")));
            }
            vocab.push(tok.to_string());
        }
        if vocab.token(PAD_ID) != Some(PAD_TOKEN) || vocab.token(UNK_ID) != Some(UNK_TOKEN) {
            return Err(Error::parse(path, 1, "first two entries must be <pad> and <unk>"));
        }
        Ok(vocab)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus() -> Vec<Vec<&'static str>> {
        vec![vec!["a", "b", "a"]]
    }

    #[test]
    fn frequency_order() {
        let v = Vocabulary::build(corpus(), 4).unwrap();
        assert_eq!(v.tokens(), [PAD_TOKEN, UNK_TOKEN, "a", "b"]);
    }

    #[test]
    fn cap_drops_rarest() {
        let v = Vocabulary::build(corpus(), 3).unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(v.get("b"), None);
        assert_eq!(v.id("b"), UNK_ID);
    }

    #[test]
    fn ties_break_lexicographically() {
        let v = Vocabulary::build(vec![vec!["x", "c"]], 10).unwrap();
        assert!(v.id("c") < v.id("x"));
    }

    #[test]
    fn empty_corpus_reserved_only() {
        let v = Vocabulary::build(Vec::<Vec<String>>::new(), 10).unwrap();
        assert_eq!(v.len(), 2);
        assert!(Vocabulary::build(corpus(), 1).is_err());
    }

    #[test]
    fn encode_pads_truncates_and_maps_unknown() {
        let v = Vocabulary::build(corpus(), 4).unwrap();
        assert_eq!(v.encode(&["a"], 3), (vec![2, 0, 0], 1));
        let long: Vec<&str> = ["a", "b"].iter().cycle().take(10).copied().collect();
        assert_eq!(v.encode(&long, 4), (vec![2, 3, 2, 3], 4));
        assert_eq!(v.encode(&["zzz"], 1), (vec![UNK_ID], 1));
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.tsv");
        let v = Vocabulary::build(vec![vec!["b", "a", "a", "c"]], 10).unwrap();
        v.save(&path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().nth(2), Some("a\t2"));
        assert_eq!(Vocabulary::load(&path).unwrap(), v);
    }

    #[test]
    fn load_rejects_sparse_ids() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.tsv");
        std::fs::write(&path, "<pad>\t0\n<unk>\t1\nfoo\t3\n").unwrap();
        let err = Vocabulary::load(&path).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }
}

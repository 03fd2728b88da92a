//! Tokenization, vocabulary, GloVe loading and CSV ingestion.

mod dataset;
mod glove;
mod tokenize;
mod vocab;

pub use dataset::{
    encode_records, load_csv_dataset, split_labeled_unlabeled, stratified_sample, CsvSchema, Example, RawRecord, Split,
};
pub use glove::{load_glove, EmbeddingMatrix, RowSource, DEFAULT_EMBED_DIM};
pub use tokenize::tokenize;
pub use vocab::{Vocabulary, DEFAULT_VOCAB_CAP, PAD_ID, PAD_TOKEN, UNK_ID, UNK_TOKEN};

mod common;

use blendcnn_core::synth::{write_synthetic_corpus, SynthConfig};
use blendcnn_core::text::{
    encode_records, load_csv_dataset, split_labeled_unlabeled, stratified_sample, tokenize, CsvSchema, Vocabulary,
    PAD_ID, UNK_ID,
};
use proptest::prelude::*;

fn corpus(per_class: usize) -> (tempfile::TempDir, std::path::PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SynthConfig {
        train_per_class: per_class,
        test_per_class: 10,
        ..SynthConfig::default()
    };
    let (train, _) = write_synthetic_corpus(dir.path(), &cfg).unwrap();
    (dir, train)
}

#[test]
fn desk_subset_is_one_hundred_per_class() {
    let (_dir, train) = corpus(250);
    let records = load_csv_dataset(&train, &CsvSchema::default()).unwrap();
    let idx = stratified_sample(&records, 4, 100, 17).unwrap();
    assert_eq!(idx.len(), 400);
    let mut counts = [0; 4];
    for &i in &idx {
        counts[records[i].label] += 1;
    }
    assert_eq!(counts, [100; 4]);
    assert_eq!(idx, stratified_sample(&records, 4, 100, 17).unwrap());

    let split = split_labeled_unlabeled(&records, 4, 100, 1, 17).unwrap();
    assert_eq!(split.labeled, idx);
    assert_eq!(split.unlabeled.len(), 400);
    assert!(split.unlabeled.iter().all(|i| !idx.contains(i)));
}

#[test]
fn vocabulary_decodes_its_own_ids() {
    let (dir, train) = corpus(50);
    let records = load_csv_dataset(&train, &CsvSchema::default()).unwrap();
    let vocab = Vocabulary::build(records.iter().map(|r| tokenize(&r.text)), 300).unwrap();
    assert!(vocab.len() <= 300);
    for (id, token) in vocab.tokens().iter().enumerate() {
        assert_eq!(vocab.id(token) as usize, id);
        assert_eq!(vocab.token(id as u32), Some(token.as_str()));
    }
    let path = dir.path().join("vocab.tsv");
    vocab.save(&path).unwrap();
    assert_eq!(Vocabulary::load(&path).unwrap(), vocab);

    // Encoded examples satisfy the padding contract.
    for ex in encode_records(&records, &vocab, 16, true) {
        ex.validate(4).unwrap();
        assert_eq!(ex.token_ids.len(), 16);
        assert!(ex.token_ids[..ex.valid_len].iter().all(|&t| t != PAD_ID));
    }
}

proptest! {
    #[test]
    fn encode_of_decoded_padding_is_idempotent(words in proptest::collection::vec("[a-e]{1,3}", 0..30), seq_len in 1usize..20) {
        let corpus = vec![tokenize("a b c d e aa ab ba bb abc cab")];
        let vocab = Vocabulary::build(corpus, 8).unwrap();
        let (ids, valid) = vocab.encode(&words, seq_len);
        prop_assert!(valid <= seq_len);
        prop_assert_eq!(ids.len(), seq_len);
        let decoded: Vec<&str> = ids[..valid].iter().map(|&i| vocab.token(i).unwrap()).collect();
        let (again, valid_again) = vocab.encode(&decoded, seq_len);
        prop_assert_eq!(&again, &ids);
        prop_assert_eq!(valid_again, valid);
        for (w, &id) in words.iter().zip(&ids) {
            if id != UNK_ID {
                prop_assert_eq!(vocab.token(id).unwrap(), w.as_str());
            }
        }
    }
}

use hsdlab::corpus::kfold_split;
use hsdlab::error::{CheckpointError, Error};
use hsdlab::eval::ensemble_probs;
use hsdlab::fixtures::{generate, FixtureConfig};
use hsdlab::model::ModelConfig;
use hsdlab::pipeline::{encode_samples, tokenize_dataset, training_data, vocab_for};
use hsdlab::preprocess::{EncodedSample, Preprocessor};
use hsdlab::train::{load_checkpoint, predict_probs, save_checkpoint, train_all_folds, TrainConfig, TrainingData};

fn small() -> (TrainingData, ModelConfig, hsdlab::preprocess::Vocab) {
    let pre = Preprocessor::bundled();
    let tokens = tokenize_dataset(&generate(&FixtureConfig { n: 40, ..Default::default() }, "x").unwrap(), &pre);
    let vocab = vocab_for(&tokens, 1, 500).unwrap();
    let cfg = ModelConfig {
        vocab_size: vocab.len(),
        embed_dim: 6,
        hidden_dim: 5,
        attention_dim: 4,
        dense_dim: 4,
        max_len: 12,
        dropout: 0.1,
    };
    let data = training_data(&tokens, &vocab, cfg.max_len).unwrap();
    (data, cfg, vocab)
}

#[test]
fn checkpoints_reload_bit_exactly() {
    let (data, cfg, _) = small();
    let folds = kfold_split(data.len(), 4, 2023).unwrap();
    let tc = TrainConfig { epochs: 2, batch_size: 8, ..TrainConfig::default() };
    let results = train_all_folds(&data, &folds, &cfg, &tc).unwrap();
    assert_eq!(results.len(), 4);
    let dir = tempfile::tempdir().unwrap();
    let refs: Vec<&EncodedSample> = data.samples.iter().take(10).collect();
    for r in &results {
        let path = dir.path().join(format!("{}.json", r.checkpoint.fold));
        save_checkpoint(&r.checkpoint, &path).unwrap();
        let back = load_checkpoint(&path).unwrap();
        assert_eq!(back, r.checkpoint);
        let a = predict_probs(&r.checkpoint.params, &refs).unwrap();
        let b = predict_probs(&back.params, &refs).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
        let val: Vec<&EncodedSample> = folds.validation_indices(r.checkpoint.fold).iter().map(|&i| &data.samples[i]).collect();
        assert_eq!(predict_probs(&back.params, &val).unwrap(), predict_probs(&r.checkpoint.params, &val).unwrap());
    }
}

#[test]
fn truncated_and_foreign_checkpoints() {
    let (data, cfg, vocab) = small();
    let folds = kfold_split(data.len(), 2, 1).unwrap();
    let tc = TrainConfig { epochs: 1, ..TrainConfig::default() };
    let mut results = train_all_folds(&data, &folds, &cfg, &tc).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    save_checkpoint(&results[0].checkpoint, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, &text[..text.len() - 40]).unwrap();
    assert!(matches!(load_checkpoint(&path), Err(Error::Checkpoint(CheckpointError::Truncated))));

    std::fs::write(&path, text.replacen("\"version\":1", "\"version\":9", 1)).unwrap();
    assert!(matches!(load_checkpoint(&path), Err(Error::Checkpoint(CheckpointError::Version { found: 9, .. }))));

    assert!(results[0].checkpoint.verify_vocab(&vocab).is_ok());
    results[1].checkpoint.vocab_sha256 = "0".repeat(64);
    assert!(results[1].checkpoint.verify_vocab(&vocab).is_err());
    let both: Vec<_> = results.into_iter().map(|r| r.checkpoint).collect();
    let enc = encode_samples(&[], &vocab, cfg.max_len);
    assert!(matches!(ensemble_probs(&both, &enc), Err(Error::EnsembleMismatch(_))));
}

#[test]
fn training_is_reproducible() {
    let (data, cfg, _) = small();
    let folds = kfold_split(data.len(), 2, 5).unwrap();
    let tc = TrainConfig { epochs: 2, ..TrainConfig::default() };
    let a = train_all_folds(&data, &folds, &cfg, &tc).unwrap();
    let b = train_all_folds(&data, &folds, &cfg, &tc).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.checkpoint.to_json(), y.checkpoint.to_json());
        assert_eq!(x.log, y.log);
    }
    let other = train_all_folds(&data, &folds, &cfg, &TrainConfig { seed: 6, ..tc }).unwrap();
    assert_ne!(a[0].checkpoint.to_json(), other[0].checkpoint.to_json());
}

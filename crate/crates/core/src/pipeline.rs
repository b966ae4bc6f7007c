//! Glue between raw datasets and the model: cleaning, vocabulary, encoding.

use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, Label};
use crate::error::{Error, Result};
use crate::preprocess::{build_vocab, encode_or_unk, EncodedSample, Preprocessor, Vocab};
use crate::train::TrainingData;

/// One cleaned post, as written by `hsdlab prep`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenizedSample {
    pub id: String,
    pub tokens: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
}

pub fn tokenize_dataset(dataset: &Dataset, pre: &Preprocessor) -> Vec<TokenizedSample> {
    dataset
        .samples
        .iter()
        .map(|s| TokenizedSample {
            id: s.id.clone(),
            tokens: pre.clean(&s.text),
            label: s.label,
        })
        .collect()
}

pub fn to_jsonl(samples: &[TokenizedSample]) -> String {
    samples
        .iter()
        .map(|s| serde_json::to_string(s).expect("tokenized sample serializes") + "\n")
        .collect()
}

pub fn from_jsonl(text: &str) -> Result<Vec<TokenizedSample>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Format {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn vocab_for(samples: &[TokenizedSample], min_freq: usize, max_size: usize) -> Result<Vocab> {
    let docs: Vec<&[String]> = samples.iter().map(|s| s.tokens.as_slice()).collect();
    build_vocab(&docs, min_freq, max_size)
}

pub fn encode_samples(samples: &[TokenizedSample], vocab: &Vocab, max_len: usize) -> Vec<EncodedSample> {
    samples.iter().map(|s| encode_or_unk(&s.tokens, vocab, max_len)).collect()
}

pub fn training_data(samples: &[TokenizedSample], vocab: &Vocab, max_len: usize) -> Result<TrainingData> {
    let labels = samples
        .iter()
        .map(|s| s.label.ok_or_else(|| Error::Argument(format!("sample `{}` has no label", s.id))))
        .collect::<Result<Vec<_>>>()?;
    TrainingData::new(encode_samples(samples, vocab, max_len), labels, vocab.fingerprint())
}

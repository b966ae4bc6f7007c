use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const PAD: u32 = 0;
pub const UNK: u32 = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";

/// Token/id bijection with PAD = 0 and UNK = 1 reserved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    min_freq: usize,
    max_size: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VocabFile {
    tokens: Vec<String>,
    min_freq: usize,
    max_size: usize,
}

impl Vocab {
    fn from_tokens(tokens: Vec<String>, min_freq: usize, max_size: usize) -> Result<Self> {
        if tokens.len() < 2 || tokens[0] != PAD_TOKEN || tokens[1] != UNK_TOKEN {
            return Err(Error::Argument(format!(
                "vocab must start with {PAD_TOKEN} and {UNK_TOKEN}"
            )));
        }
        if tokens.len() > max_size {
            return Err(Error::Argument(format!(
                "vocab has {} tokens, above max_size {max_size}",
                tokens.len()
            )));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (id, tok) in tokens.iter().enumerate().skip(2) {
            if index.insert(tok.clone(), id as u32).is_some() || tok == PAD_TOKEN || tok == UNK_TOKEN {
                return Err(Error::Argument(format!("duplicate vocab token `{tok}`")));
            }
        }
        Ok(Vocab {
            tokens,
            index,
            min_freq,
            max_size,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Id of a corpus token. The reserved marker strings map to UNK like
    /// any other unseen token.
    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(UNK)
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

    pub fn min_freq(&self) -> usize {
        self.min_freq
    }

    pub fn max_size(&self) -> usize {
        self.max_size
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&VocabFile {
            tokens: self.tokens.clone(),
            min_freq: self.min_freq,
            max_size: self.max_size,
        })
        .expect("vocab serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: VocabFile = serde_json::from_str(s)?;
        Self::from_tokens(file.tokens, file.min_freq, file.max_size)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}

/// Admits tokens seen at least `min_freq` times, most frequent first, ties
/// broken lexicographically, until the vocab holds `max_size` entries.
pub fn build_vocab<D: AsRef<[S]>, S: AsRef<str>>(corpus: &[D], min_freq: usize, max_size: usize) -> Result<Vocab> {
    if min_freq < 1 {
        return Err(Error::Argument("min_freq must be at least 1".into()));
    }
    if max_size < 3 {
        return Err(Error::Argument("max_size must be at least 3".into()));
    }
    let mut freq: HashMap<&str, usize> = HashMap::new();
    for doc in corpus {
        for tok in doc.as_ref() {
            *freq.entry(tok.as_ref()).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = freq
        .into_iter()
        .filter(|&(t, f)| f >= min_freq && t != PAD_TOKEN && t != UNK_TOKEN)
        .collect();
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

    let mut tokens = vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()];
    tokens.extend(ranked.into_iter().take(max_size - 2).map(|(t, _)| t.to_string()));
    Vocab::from_tokens(tokens, min_freq, max_size)
}

/// Fixed-length id sequence with its validity mask.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedSample {
    pub ids: Vec<u32>,
    pub mask: Vec<u8>,
    pub true_len: usize,
}

impl EncodedSample {
    pub fn max_len(&self) -> usize {
        self.ids.len()
    }

    /// Ids of the real (unmasked) positions.
    pub fn tokens(&self) -> &[u32] {
        &self.ids[..self.true_len]
    }
}

/// Keeps the first `max_len` tokens, maps unknowns to UNK, right-pads with PAD.
pub fn encode<S: AsRef<str>>(tokens: &[S], vocab: &Vocab, max_len: usize) -> EncodedSample {
    assert!(max_len >= 1, "max_len must be at least 1");
    let true_len = tokens.len().min(max_len);
    let mut ids = vec![PAD; max_len];
    let mut mask = vec![0u8; max_len];
    for (t, tok) in tokens.iter().take(true_len).enumerate() {
        ids[t] = vocab.id(tok.as_ref());
        mask[t] = 1;
    }
    EncodedSample { ids, mask, true_len }
}

/// Like [`encode`], but a post that cleaned down to nothing becomes a single
/// UNK so the model always sees at least one position.
pub fn encode_or_unk<S: AsRef<str>>(tokens: &[S], vocab: &Vocab, max_len: usize) -> EncodedSample {
    let mut enc = encode(tokens, vocab, max_len);
    if enc.true_len == 0 {
        enc.ids[0] = UNK;
        enc.mask[0] = 1;
        enc.true_len = 1;
    }
    enc
}

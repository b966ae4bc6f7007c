//! Versioned JSON checkpoints with base64 little-endian `f32` tensors.

use std::collections::BTreeMap;
use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::TrainConfig;
use crate::error::{CheckpointError, Error, Result};
use crate::model::{ModelConfig, ModelParams};
use crate::preprocess::Vocab;

pub const CHECKPOINT_VERSION: u64 = 1;

/// A trained fold model. Parameters are held at `f32` precision so that a
/// save/load round trip is exact.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model_cfg: ModelConfig,
    pub train_cfg: TrainConfig,
    pub fold: usize,
    pub vocab_sha256: String,
    pub final_train_loss: f64,
    pub params: ModelParams,
}

#[derive(Serialize, Deserialize)]
struct TensorRecord {
    shape: Vec<usize>,
    data: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope {
    version: u64,
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
    fold: usize,
    vocab_sha256: String,
    final_train_loss: f64,
    tensors_sha256: String,
    tensors: BTreeMap<String, TensorRecord>,
}

fn tensor_bytes(data: &[f64]) -> Vec<u8> {
    data.iter().flat_map(|&x| (x as f32).to_le_bytes()).collect()
}

fn tensors_digest(params: &ModelParams) -> String {
    let mut hasher = Sha256::new();
    for (name, (_, data)) in ModelParams::tensor_names().iter().zip(params.tensors()) {
        hasher.update(name.as_bytes());
        hasher.update(tensor_bytes(data));
    }
    hex::encode(hasher.finalize())
}

impl Checkpoint {
    pub fn new(mut params: ModelParams, train_cfg: TrainConfig, fold: usize, vocab_sha256: String, final_train_loss: f64) -> Self {
        params.quantize_f32();
        Checkpoint {
            model_cfg: params.config,
            train_cfg,
            fold,
            vocab_sha256,
            final_train_loss,
            params,
        }
    }

    pub fn verify_vocab(&self, vocab: &Vocab) -> Result<(), CheckpointError> {
        let fp = vocab.fingerprint();
        if fp != self.vocab_sha256 {
            return Err(CheckpointError::Fingerprint {
                checkpoint: self.vocab_sha256.clone(),
                vocab: fp,
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let tensors = ModelParams::tensor_names()
            .into_iter()
            .zip(self.params.tensors())
            .map(|(name, (shape, data))| {
                let rec = TensorRecord {
                    shape,
                    data: STANDARD.encode(tensor_bytes(data)),
                };
                (name, rec)
            })
            .collect();
        let env = Envelope {
            version: CHECKPOINT_VERSION,
            model_cfg: self.model_cfg,
            train_cfg: self.train_cfg,
            fold: self.fold,
            vocab_sha256: self.vocab_sha256.clone(),
            final_train_loss: self.final_train_loss,
            tensors_sha256: tensors_digest(&self.params),
            tensors,
        };
        serde_json::to_string(&env).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, CheckpointError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| match e.classify() {
            serde_json::error::Category::Eof => CheckpointError::Truncated,
            _ => CheckpointError::Corrupt(e.to_string()),
        })?;
        match value.get("version").and_then(serde_json::Value::as_u64) {
            Some(CHECKPOINT_VERSION) => {}
            Some(found) => {
                return Err(CheckpointError::Version {
                    found,
                    supported: CHECKPOINT_VERSION,
                })
            }
            None => return Err(CheckpointError::Corrupt("missing version".into())),
        }
        let env: Envelope = serde_json::from_value(value).map_err(|e| CheckpointError::Corrupt(e.to_string()))?;
        env.model_cfg
            .validate()
            .map_err(|e| CheckpointError::Corrupt(e.to_string()))?;

        let mut params = ModelParams::zeros(env.model_cfg);
        let names = ModelParams::tensor_names();
        let shapes: Vec<Vec<usize>> = params.tensors().into_iter().map(|(s, _)| s).collect();
        if env.tensors.len() != names.len() {
            return Err(CheckpointError::Corrupt(format!("expected {} tensors, found {}", names.len(), env.tensors.len())));
        }
        for ((name, shape), dst) in names.iter().zip(shapes).zip(params.tensors_mut()) {
            let rec = env
                .tensors
                .get(name)
                .ok_or_else(|| CheckpointError::Corrupt(format!("missing tensor `{name}`")))?;
            if rec.shape != shape {
                return Err(CheckpointError::Corrupt(format!("tensor `{name}` has shape {:?}, expected {shape:?}", rec.shape)));
            }
            let bytes = STANDARD
                .decode(&rec.data)
                .map_err(|e| CheckpointError::Corrupt(format!("tensor `{name}`: {e}")))?;
            if bytes.len() != dst.len() * 4 {
                return Err(CheckpointError::Corrupt(format!("tensor `{name}` holds {} bytes, expected {}", bytes.len(), dst.len() * 4)));
            }
            for (x, chunk) in dst.iter_mut().zip(bytes.chunks_exact(4)) {
                *x = f32::from_le_bytes(chunk.try_into().unwrap()) as f64;
            }
        }
        let computed = tensors_digest(&params);
        if computed != env.tensors_sha256 {
            return Err(CheckpointError::Hash {
                stored: env.tensors_sha256,
                computed,
            });
        }
        Ok(Checkpoint {
            model_cfg: env.model_cfg,
            train_cfg: env.train_cfg,
            fold: env.fold,
            vocab_sha256: env.vocab_sha256,
            final_train_loss: env.final_train_loss,
            params,
        })
    }
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: impl AsRef<Path>) -> Result<()> {
    crate::fsutil::write_atomic(path, ckpt.to_json().as_bytes())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(Checkpoint::from_json(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{forward, init_params};
    use crate::preprocess::{build_vocab, encode};

    fn ckpt() -> Checkpoint {
        let cfg = ModelConfig {
            vocab_size: 12,
            embed_dim: 4,
            hidden_dim: 3,
            attention_dim: 5,
            dense_dim: 2,
            max_len: 6,
            dropout: 0.1,
        };
        Checkpoint::new(init_params(cfg, 77), TrainConfig::default(), 2, "abc".into(), 0.25)
    }

    #[test]
    fn round_trip_is_exact() {
        let c = ckpt();
        let back = Checkpoint::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
        let tokens: Vec<String> = (0..10).map(|i| format!("w{i}")).collect();
        let vocab = build_vocab(std::slice::from_ref(&tokens), 1, 12).unwrap();
        for n in 1..=6 {
            let s = encode(&tokens[..n], &vocab, 6);
            let a = forward(&c.params, &s, false, 0).unwrap().0;
            let b = forward(&back.params, &s, false, 0).unwrap().0;
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn distinct_load_errors() {
        let json = ckpt().to_json();
        assert_eq!(Checkpoint::from_json(&json[..json.len() / 2]), Err(CheckpointError::Truncated));
        let bumped = json.replacen("\"version\":1", "\"version\":9", 1);
        assert!(matches!(Checkpoint::from_json(&bumped), Err(CheckpointError::Version { found: 9, .. })));

        // Flip one base64 digit inside the embedding tensor.
        let start = json.find("\"embedding\"").unwrap();
        let at = start + json[start..].find("\"data\":\"").unwrap() + 8;
        let mut bytes = json.into_bytes();
        bytes[at] = if bytes[at] == b'A' { b'B' } else { b'A' };
        let tampered = String::from_utf8(bytes).unwrap();
        assert!(matches!(Checkpoint::from_json(&tampered), Err(CheckpointError::Hash { .. })));
        assert!(matches!(Checkpoint::from_json("[1,2]"), Err(CheckpointError::Corrupt(_))));
    }

    #[test]
    fn fingerprint_check() {
        let vocab = build_vocab(&[vec!["x".to_string()]], 1, 5).unwrap();
        let mut c = ckpt();
        assert!(matches!(c.verify_vocab(&vocab), Err(CheckpointError::Fingerprint { .. })));
        c.vocab_sha256 = vocab.fingerprint();
        assert!(c.verify_vocab(&vocab).is_ok());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fold_0.json");
        save_checkpoint(&ckpt(), &path).unwrap();
        assert_eq!(load_checkpoint(&path).unwrap(), ckpt());
        std::fs::write(&path, &std::fs::read(&path).unwrap()[..100]).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(Error::Checkpoint(CheckpointError::Truncated))));
    }
}

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{ColumnSchema, DEFAULT_K, DEFAULT_SEED};
use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::preprocess::{CleanConfig, EmojiTable, Preprocessor, UnigramTable};
use crate::train::TrainConfig;

pub const SEED_ENV: &str = "HSDLAB_SEED";

/// Network shape. The vocabulary size is not configured here; it comes from
/// the vocabulary built at training time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub attention_dim: usize,
    pub dense_dim: usize,
    pub max_len: usize,
    pub dropout: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        let m = ModelConfig::default();
        ModelSection {
            embed_dim: m.embed_dim,
            hidden_dim: m.hidden_dim,
            attention_dim: m.attention_dim,
            dense_dim: m.dense_dim,
            max_len: m.max_len,
            dropout: m.dropout,
        }
    }
}

impl ModelSection {
    pub fn with_vocab(&self, vocab_size: usize) -> ModelConfig {
        ModelConfig {
            vocab_size,
            embed_dim: self.embed_dim,
            hidden_dim: self.hidden_dim,
            attention_dim: self.attention_dim,
            dense_dim: self.dense_dim,
            max_len: self.max_len,
            dropout: self.dropout,
        }
    }
}

/// Optimizer settings; the seed lives at the top level of [`RunConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub clip_norm: Option<f64>,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainSection {
            epochs: t.epochs,
            batch_size: t.batch_size,
            lr: t.lr,
            beta1: t.beta1,
            beta2: t.beta2,
            adam_eps: t.adam_eps,
            clip_norm: t.clip_norm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VocabSection {
    pub min_freq: usize,
    pub max_size: usize,
}

impl Default for VocabSection {
    fn default() -> Self {
        VocabSection {
            min_freq: 2,
            max_size: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub train_csv: Option<PathBuf>,
    pub test_csv: Option<PathBuf>,
    pub language: String,
    pub schema: ColumnSchema,
    /// Bundled tables are used when these are unset.
    pub emoji_table: Option<PathBuf>,
    pub unigram_table: Option<PathBuf>,
    pub pretrained_vectors: Option<PathBuf>,
    pub clean: CleanConfig,
    pub model: ModelSection,
    pub train: TrainSection,
    pub vocab: VocabSection,
    pub k: usize,
    /// Unset means: `HSDLAB_SEED` if present, else 2023.
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            train_csv: None,
            test_csv: None,
            language: String::new(),
            schema: ColumnSchema::default(),
            emoji_table: None,
            unigram_table: None,
            pretrained_vectors: None,
            clean: CleanConfig::default(),
            model: ModelSection::default(),
            train: TrainSection::default(),
            vocab: VocabSection::default(),
            k: DEFAULT_K,
            seed: None,
            out_dir: PathBuf::from("run"),
        }
    }
}

/// Parses config JSON. Unknown keys and type mismatches are reported with
/// the dotted path of the offending field.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        if path == "." {
            Error::Config(e.inner().to_string())
        } else {
            Error::Config(format!("{path}: {}", e.inner()))
        }
    })
}

/// Reads a config file; relative paths inside it are taken relative to the
/// file's own directory.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg = parse_config_str(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    let base = path.parent().unwrap_or(Path::new(""));
    let rebase = |p: &mut Option<PathBuf>| {
        if let Some(p) = p.as_mut().filter(|p| p.is_relative()) {
            *p = base.join(&*p);
        }
    };
    rebase(&mut cfg.train_csv);
    rebase(&mut cfg.test_csv);
    rebase(&mut cfg.emoji_table);
    rebase(&mut cfg.unigram_table);
    rebase(&mut cfg.pretrained_vectors);
    if cfg.out_dir.is_relative() {
        cfg.out_dir = base.join(&cfg.out_dir);
    }
    Ok(cfg)
}

impl RunConfig {
    /// Fills the seed from the environment when neither file nor flags set it.
    pub fn resolve_seed(&mut self, env_seed: Option<&str>) -> Result<()> {
        if self.seed.is_none() {
            self.seed = Some(match env_seed {
                Some(raw) => raw
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("{SEED_ENV}: `{raw}` is not an unsigned integer")))?,
                None => DEFAULT_SEED,
            });
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn train_config(&self) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            epochs: t.epochs,
            batch_size: t.batch_size,
            lr: t.lr,
            beta1: t.beta1,
            beta2: t.beta2,
            adam_eps: t.adam_eps,
            clip_norm: t.clip_norm,
            seed: self.seed(),
        }
    }

    /// Checks ranges and that every referenced input exists.
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::Config(format!("k must be at least 2, got {}", self.k)));
        }
        self.model
            .with_vocab(2)
            .validate()
            .map_err(|e| Error::Config(format!("model: {e}")))?;
        self.train_config()
            .validate()
            .map_err(|e| Error::Config(format!("train: {e}")))?;
        if self.vocab.min_freq < 1 || self.vocab.max_size < 3 {
            return Err(Error::Config("vocab: min_freq must be ≥ 1 and max_size ≥ 3".into()));
        }
        let paths = [
            ("train_csv", &self.train_csv),
            ("test_csv", &self.test_csv),
            ("emoji_table", &self.emoji_table),
            ("unigram_table", &self.unigram_table),
            ("pretrained_vectors", &self.pretrained_vectors),
        ];
        for (key, path) in paths {
            if let Some(p) = path.as_ref().filter(|p| !p.exists()) {
                return Err(Error::Config(format!("{key}: {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    pub fn preprocessor(&self) -> Result<Preprocessor> {
        let emoji = match &self.emoji_table {
            Some(p) => EmojiTable::load(p)?,
            None => EmojiTable::bundled(),
        };
        let unigrams = match &self.unigram_table {
            Some(p) => UnigramTable::load(p)?,
            None => UnigramTable::bundled(),
        };
        Ok(Preprocessor::new(self.clean, emoji, unigrams))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let mut cfg = parse_config_str(r#"{"train_csv":"a.csv","schema":{"text":"body","label":"task_1"}}"#).unwrap();
        cfg.resolve_seed(None).unwrap();
        assert_eq!((cfg.k, cfg.seed()), (5, 2023));
        assert_eq!(cfg.schema.text, "body");
        assert_eq!(cfg.schema.id, "tweet_id");
        assert_eq!(cfg.train_config(), TrainConfig::default());
        assert_eq!(cfg.model.with_vocab(20_000), ModelConfig::default());
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse_config_str(r#"{"train":{"epohcs":3}}"#).unwrap_err().to_string();
        assert!(err.contains("epohcs"), "{err}");
        let err = parse_config_str(r#"{"epohcs":3}"#).unwrap_err().to_string();
        assert!(err.contains("epohcs"), "{err}");
    }

    #[test]
    fn type_mismatch_has_path() {
        let err = parse_config_str(r#"{"model":{"hidden_dim":"big"}}"#).unwrap_err().to_string();
        assert!(err.contains("model.hidden_dim"), "{err}");
        assert!(err.contains("expected usize"), "{err}");
    }

    #[test]
    fn seed_priority() {
        let mut cfg = parse_config_str(r#"{"seed":11}"#).unwrap();
        cfg.resolve_seed(Some("5")).unwrap();
        assert_eq!(cfg.seed(), 11);
        let mut cfg = parse_config_str("{}").unwrap();
        cfg.resolve_seed(Some("5")).unwrap();
        assert_eq!(cfg.seed(), 5);
        let mut cfg = parse_config_str("{}").unwrap();
        assert!(cfg.resolve_seed(Some("x")).is_err());
    }

    #[test]
    fn validation() {
        let mut cfg = RunConfig::default();
        cfg.validate().unwrap();
        cfg.train_csv = Some("/nonexistent/file.csv".into());
        assert!(cfg.validate().unwrap_err().to_string().contains("train_csv"));
        let cfg = RunConfig { k: 1, ..RunConfig::default() };
        assert!(cfg.validate().is_err());
    }
}

//! Mini-batch BCE training with Adam, one model per cross-validation fold.

mod adam;
mod checkpoint;
mod loss;

pub use adam::{adam_step, clip_global_norm, AdamConfig, AdamState};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_VERSION};
pub use loss::{bce_logit_grad, bce_loss, LOSS_EPS};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{FoldAssignment, Label, DEFAULT_SEED};
use crate::error::{Error, Result};
use crate::eval::{compute_metrics, confusion};
use crate::model::{apply_pretrained, backward_batch, forward_batch, init_params, ModelConfig, ModelParams};
use crate::preprocess::EncodedSample;
use crate::rng::{derive_seed, SplitMix64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    /// Global gradient-norm clip; `null` disables clipping.
    pub clip_norm: Option<f64>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            batch_size: 32,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            clip_norm: Some(5.0),
            seed: DEFAULT_SEED,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Argument("epochs and batch_size must be at least 1".into()));
        }
        if !(self.lr > 0.0) {
            return Err(Error::Argument(format!("learning rate must be positive, got {}", self.lr)));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Argument("Adam betas must lie in [0, 1)".into()));
        }
        if matches!(self.clip_norm, Some(c) if !(c > 0.0)) {
            return Err(Error::Argument("clip_norm must be positive".into()));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.adam_eps,
            clip_norm: self.clip_norm,
        }
    }
}

/// Encoded, labeled samples ready for training, tied to one vocabulary.
#[derive(Debug, Clone)]
pub struct TrainingData {
    pub samples: Vec<EncodedSample>,
    pub labels: Vec<Label>,
    pub vocab_sha256: String,
    /// Embedding rows copied over the random initialization of every fold.
    pub pretrained: BTreeMap<u32, Vec<f64>>,
}

impl TrainingData {
    pub fn new(samples: Vec<EncodedSample>, labels: Vec<Label>, vocab_sha256: String) -> Result<Self> {
        if samples.len() != labels.len() {
            return Err(Error::Argument(format!("{} samples but {} labels", samples.len(), labels.len())));
        }
        Ok(TrainingData {
            samples,
            labels,
            vocab_sha256,
            pretrained: BTreeMap::new(),
        })
    }

    pub fn with_pretrained(mut self, rows: BTreeMap<u32, Vec<f64>>) -> Self {
        self.pretrained = rows;
        self
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// One line of the training log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub fold: usize,
    pub epoch: usize,
    pub train_loss: f64,
    pub val_macro_f1: f64,
}

#[derive(Debug, Clone)]
pub struct FoldResult {
    pub checkpoint: Checkpoint,
    pub log: Vec<EpochLog>,
}

/// Eval-mode probabilities, in input order.
pub fn predict_probs(params: &ModelParams, samples: &[&EncodedSample]) -> Result<Vec<f64>> {
    let mut probs = Vec::with_capacity(samples.len());
    for chunk in samples.chunks(64) {
        probs.extend_from_slice(forward_batch(params, chunk, None)?.probs());
    }
    Ok(probs)
}

/// Mean eval-mode BCE over the given indices.
pub fn mean_loss(params: &ModelParams, data: &TrainingData, indices: &[usize]) -> Result<f64> {
    let refs: Vec<&EncodedSample> = indices.iter().map(|&i| &data.samples[i]).collect();
    let probs = predict_probs(params, &refs)?;
    let total: f64 = probs
        .iter()
        .zip(indices)
        .map(|(&p, &i)| bce_loss(p, f64::from(data.labels[i].code())).0)
        .sum();
    Ok(total / indices.len().max(1) as f64)
}

fn macro_f1_on(params: &ModelParams, data: &TrainingData, indices: &[usize]) -> Result<f64> {
    if indices.is_empty() {
        return Ok(0.0);
    }
    let refs: Vec<&EncodedSample> = indices.iter().map(|&i| &data.samples[i]).collect();
    let preds: Vec<Label> = predict_probs(params, &refs)?
        .into_iter()
        .map(crate::eval::threshold_label)
        .collect();
    let golds: Vec<Label> = indices.iter().map(|&i| data.labels[i]).collect();
    Ok(compute_metrics(&confusion(&preds, &golds)?).macro_f1)
}

/// Trains from scratch on `indices` and returns the final parameters with
/// the per-epoch log. `val` is only used for reporting.
pub fn train_on(
    data: &TrainingData,
    indices: &[usize],
    val: &[usize],
    fold: usize,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<(ModelParams, Vec<EpochLog>)> {
    model_cfg.validate()?;
    train_cfg.validate()?;
    if indices.is_empty() {
        return Err(Error::Argument(format!("fold {fold}: empty training partition")));
    }
    let adam = train_cfg.adam();
    let mut params = init_params(*model_cfg, derive_seed(train_cfg.seed, fold as u64));
    if let Some(row) = data.pretrained.values().find(|r| r.len() != model_cfg.embed_dim) {
        return Err(Error::DimensionMismatch {
            expected: model_cfg.embed_dim,
            found: row.len(),
        });
    }
    apply_pretrained(&mut params, &data.pretrained);
    let mut state = AdamState::new(&params);
    let dropout_base = derive_seed(train_cfg.seed, 0x00D2_0900 + fold as u64);
    let mut log = Vec::with_capacity(train_cfg.epochs);
    let mut drawn = 0u64;

    for epoch in 0..train_cfg.epochs {
        let mut order = indices.to_vec();
        SplitMix64::new(train_cfg.seed.wrapping_add(epoch as u64)).shuffle(&mut order);
        let mut loss_sum = 0.0;
        for batch in order.chunks(train_cfg.batch_size) {
            let refs: Vec<&EncodedSample> = batch.iter().map(|&i| &data.samples[i]).collect();
            let seeds: Vec<u64> = (0..batch.len() as u64).map(|k| derive_seed(dropout_base, drawn + k)).collect();
            drawn += batch.len() as u64;
            let trace = forward_batch(&params, &refs, Some(&seeds))?;
            let scale = 1.0 / batch.len() as f64;
            let dlogits: Vec<f64> = trace
                .probs()
                .iter()
                .zip(batch)
                .map(|(&p, &i)| {
                    let y = f64::from(data.labels[i].code());
                    loss_sum += bce_loss(p, y).0;
                    scale * bce_logit_grad(p, y)
                })
                .collect();
            let mut grads = backward_batch(&params, &trace, &dlogits);
            adam_step(&mut params, &mut grads, &mut state, &adam);
        }
        if !params.is_finite() {
            return Err(Error::Diverged(format!("fold {fold}: non-finite parameters after epoch {}", epoch + 1)));
        }
        let entry = EpochLog {
            fold,
            epoch: epoch + 1,
            train_loss: loss_sum / indices.len() as f64,
            val_macro_f1: macro_f1_on(&params, data, val)?,
        };
        on_epoch(&entry);
        log.push(entry);
    }
    Ok((params, log))
}

/// Trains the model for validation fold `fold` on every other fold.
pub fn train_fold(
    data: &TrainingData,
    folds: &FoldAssignment,
    fold: usize,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
) -> Result<FoldResult> {
    train_fold_with(data, folds, fold, model_cfg, train_cfg, |_| {})
}

pub fn train_fold_with(
    data: &TrainingData,
    folds: &FoldAssignment,
    fold: usize,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    on_epoch: impl FnMut(&EpochLog),
) -> Result<FoldResult> {
    if fold >= folds.k {
        return Err(Error::Argument(format!("fold {fold} out of range for k = {}", folds.k)));
    }
    if folds.n() != data.len() {
        return Err(Error::Argument(format!("fold assignment covers {} samples, data has {}", folds.n(), data.len())));
    }
    let train = folds.train_indices(fold);
    let val = folds.validation_indices(fold);
    let (params, log) = train_on(data, &train, &val, fold, model_cfg, train_cfg, on_epoch)?;
    let final_loss = log.last().map_or(f64::NAN, |e| e.train_loss);
    Ok(FoldResult {
        checkpoint: Checkpoint::new(params, *train_cfg, fold, data.vocab_sha256.clone(), final_loss),
        log,
    })
}

/// One checkpoint per fold, in fold order.
pub fn train_all_folds(
    data: &TrainingData,
    folds: &FoldAssignment,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
) -> Result<Vec<FoldResult>> {
    (0..folds.k)
        .map(|fold| train_fold(data, folds, fold, model_cfg, train_cfg))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::kfold_split;
    use crate::preprocess::{build_vocab, encode};

    fn tiny_cfg() -> ModelConfig {
        ModelConfig {
            vocab_size: 0,
            embed_dim: 8,
            hidden_dim: 8,
            attention_dim: 8,
            dense_dim: 8,
            max_len: 6,
            dropout: 0.0,
        }
    }

    /// "bad" anywhere means HOF.
    fn separable(n: usize, seed: u64) -> (TrainingData, usize) {
        let words = ["sun", "tree", "road", "cup", "blue", "rain"];
        let mut rng = SplitMix64::new(seed);
        let mut docs = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let len = 2 + rng.below(4) as usize;
            let mut doc: Vec<String> = (0..len).map(|_| words[rng.below(6) as usize].to_string()).collect();
            if i % 2 == 0 {
                let pos = rng.below(len as u64) as usize;
                doc[pos] = "bad".into();
                labels.push(Label::Hof);
            } else {
                labels.push(Label::Not);
            }
            docs.push(doc);
        }
        let vocab = build_vocab(&docs, 1, 100).unwrap();
        let samples = docs.iter().map(|d| encode(d, &vocab, 6)).collect();
        (TrainingData::new(samples, labels, vocab.fingerprint()).unwrap(), vocab.len())
    }

    #[test]
    fn learns_separable_batch() {
        let (data, v) = separable(16, 1);
        let cfg = ModelConfig { vocab_size: v, ..tiny_cfg() };
        let tc = TrainConfig { epochs: 60, batch_size: 8, lr: 1e-2, ..TrainConfig::default() };
        let all: Vec<usize> = (0..data.len()).collect();
        let p0 = init_params(cfg, derive_seed(tc.seed, 0));
        let before = mean_loss(&p0, &data, &all).unwrap();
        let (params, log) = train_on(&data, &all, &all, 0, &cfg, &tc, |_| {}).unwrap();
        let after = mean_loss(&params, &data, &all).unwrap();
        assert!(after < before, "{after} !< {before}");
        assert_eq!(log.len(), 60);
        assert_eq!(log.last().unwrap().val_macro_f1, 1.0);
    }

    #[test]
    fn deterministic_and_checked() {
        let (data, v) = separable(20, 2);
        let cfg = ModelConfig { vocab_size: v, dropout: 0.2, ..tiny_cfg() };
        let tc = TrainConfig { epochs: 2, batch_size: 4, ..TrainConfig::default() };
        let folds = kfold_split(20, 5, 2023).unwrap();
        let a = train_fold(&data, &folds, 1, &cfg, &tc).unwrap();
        let b = train_fold(&data, &folds, 1, &cfg, &tc).unwrap();
        assert_eq!(a.checkpoint.to_json(), b.checkpoint.to_json());
        assert_eq!(a.log.len(), 2);
        assert!(matches!(train_fold(&data, &folds, 7, &cfg, &tc), Err(Error::Argument(_))));
    }

    #[test]
    fn all_folds_in_order() {
        let (data, v) = separable(10, 3);
        let cfg = ModelConfig { vocab_size: v, ..tiny_cfg() };
        let tc = TrainConfig { epochs: 1, ..TrainConfig::default() };
        let folds = kfold_split(10, 5, 2023).unwrap();
        let out = train_all_folds(&data, &folds, &cfg, &tc).unwrap();
        let idx: Vec<usize> = out.iter().map(|r| r.checkpoint.fold).collect();
        assert_eq!(idx, [0, 1, 2, 3, 4]);
    }

    #[test]
    fn empty_partition_rejected() {
        let (data, v) = separable(4, 4);
        let cfg = ModelConfig { vocab_size: v, ..tiny_cfg() };
        let err = train_on(&data, &[], &[0], 3, &cfg, &TrainConfig::default(), |_| {}).unwrap_err();
        assert!(err.to_string().contains("fold 3"));
    }
}

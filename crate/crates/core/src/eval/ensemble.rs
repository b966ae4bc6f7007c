use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::preprocess::EncodedSample;
use crate::train::{predict_probs, Checkpoint};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub prob: f64,
    pub label: Label,
}

/// The probability is that of NOT; ties go to NOT.
pub fn threshold_label(prob: f64) -> Label {
    label_at(prob, DEFAULT_THRESHOLD)
}

pub fn label_at(prob: f64, threshold: f64) -> Label {
    if prob >= threshold {
        Label::Not
    } else {
        Label::Hof
    }
}

/// Averages values after sorting them, so the result does not depend on
/// the order the fold models were supplied in.
pub fn order_free_mean(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

fn check_compatible(checkpoints: &[Checkpoint]) -> Result<()> {
    let first = checkpoints
        .first()
        .ok_or_else(|| Error::EnsembleMismatch("no checkpoints supplied".into()))?;
    for c in &checkpoints[1..] {
        if c.vocab_sha256 != first.vocab_sha256 {
            return Err(Error::EnsembleMismatch(format!(
                "fold {} was trained on vocabulary {}, fold {} on {}",
                first.fold, first.vocab_sha256, c.fold, c.vocab_sha256
            )));
        }
        if c.model_cfg != first.model_cfg {
            return Err(Error::EnsembleMismatch(format!(
                "fold {} and fold {} have different model configurations",
                first.fold, c.fold
            )));
        }
    }
    Ok(())
}

/// Mean eval-mode probability over all fold models, one per sample.
pub fn ensemble_probs(checkpoints: &[Checkpoint], samples: &[EncodedSample]) -> Result<Vec<f64>> {
    check_compatible(checkpoints)?;
    let refs: Vec<&EncodedSample> = samples.iter().collect();
    let per_model = checkpoints
        .iter()
        .map(|c| predict_probs(&c.params, &refs))
        .collect::<Result<Vec<_>>>()?;
    let mut column = vec![0.0; checkpoints.len()];
    Ok((0..samples.len())
        .map(|i| {
            for (slot, probs) in column.iter_mut().zip(&per_model) {
                *slot = probs[i];
            }
            order_free_mean(&mut column)
        })
        .collect())
}

pub fn ensemble_predict(
    checkpoints: &[Checkpoint],
    ids: &[String],
    samples: &[EncodedSample],
    threshold: f64,
) -> Result<Vec<PredictionRecord>> {
    if ids.len() != samples.len() {
        return Err(Error::Argument(format!("{} ids for {} samples", ids.len(), samples.len())));
    }
    let probs = ensemble_probs(checkpoints, samples)?;
    Ok(ids
        .iter()
        .zip(probs)
        .map(|(id, prob)| PredictionRecord {
            id: id.clone(),
            prob,
            label: label_at(prob, threshold),
        })
        .collect())
}

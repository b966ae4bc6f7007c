use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};

/// `counts[gold][pred]`, indexed by label code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 2]; 2],
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn get(&self, gold: Label, pred: Label) -> u64 {
        self.counts[gold.code() as usize][pred.code() as usize]
    }
}

pub fn confusion(preds: &[Label], golds: &[Label]) -> Result<ConfusionMatrix> {
    if preds.len() != golds.len() {
        return Err(Error::Argument(format!("{} predictions for {} gold labels", preds.len(), golds.len())));
    }
    if preds.is_empty() {
        return Err(Error::Argument("cannot score an empty prediction list".into()));
    }
    let mut cm = ConfusionMatrix::default();
    for (p, g) in preds.iter().zip(golds) {
        cm.counts[g.code() as usize][p.code() as usize] += 1;
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub hof: ClassMetrics,
    pub not: ClassMetrics,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
    pub n: u64,
}

impl Metrics {
    pub fn class(&self, label: Label) -> &ClassMetrics {
        match label {
            Label::Hof => &self.hof,
            Label::Not => &self.not,
        }
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn class_metrics(cm: &ConfusionMatrix, c: usize) -> ClassMetrics {
    let o = 1 - c;
    let tp = cm.counts[c][c];
    let precision = ratio(tp, tp + cm.counts[o][c]);
    let recall = ratio(tp, tp + cm.counts[c][o]);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    ClassMetrics {
        precision,
        recall,
        f1,
        support: cm.counts[c][0] + cm.counts[c][1],
    }
}

/// Per-class and macro scores. Undefined ratios (0/0) count as 0.
pub fn compute_metrics(cm: &ConfusionMatrix) -> Metrics {
    let hof = class_metrics(cm, 0);
    let not = class_metrics(cm, 1);
    Metrics {
        macro_precision: (hof.precision + not.precision) / 2.0,
        macro_recall: (hof.recall + not.recall) / 2.0,
        macro_f1: (hof.f1 + not.f1) / 2.0,
        accuracy: ratio(cm.counts[0][0] + cm.counts[1][1], cm.total()),
        n: cm.total(),
        hof,
        not,
    }
}

pub fn score_labels(preds: &[Label], golds: &[Label]) -> Result<Metrics> {
    Ok(compute_metrics(&confusion(preds, golds)?))
}

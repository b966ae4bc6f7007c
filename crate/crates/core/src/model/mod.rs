//! The classifier: embedding, two stacked bidirectional LSTM layers,
//! additive attention pooling, a ReLU dense layer and a sigmoid output unit.
//!
//! Everything runs in `f64` on time-major batches. Gradients are derived by
//! hand and checked against central finite differences in the test suite.

mod lstm;
mod network;
mod params;
mod pretrained;

pub use lstm::{lstm_cell, CellTrace};
pub use network::{backward, backward_batch, forward, forward_batch, BatchTrace, ForwardTrace};
pub use params::{init_params, DirectionParams, Gradients, LayerParams, ModelParams};
pub use pretrained::{apply_pretrained, load_pretrained_vectors};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Added to the attention score of padded positions before the softmax.
pub const MASK_BIAS: f64 = -1e30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub embed_dim: usize,
    /// Per direction; each BiLSTM layer emits `2 * hidden_dim` features.
    pub hidden_dim: usize,
    pub attention_dim: usize,
    pub dense_dim: usize,
    pub max_len: usize,
    /// Inverted-dropout rate on the dense hidden layer, training only.
    pub dropout: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            vocab_size: 20_000,
            embed_dim: 100,
            hidden_dim: 128,
            attention_dim: 64,
            dense_dim: 64,
            max_len: 64,
            dropout: 0.2,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("embed_dim", self.embed_dim),
            ("hidden_dim", self.hidden_dim),
            ("attention_dim", self.attention_dim),
            ("dense_dim", self.dense_dim),
            ("max_len", self.max_len),
        ];
        for (name, v) in dims {
            if v == 0 {
                return Err(Error::Argument(format!("{name} must be at least 1")));
            }
        }
        if self.vocab_size < 2 {
            return Err(Error::Argument("vocab_size must be at least 2 (PAD, UNK)".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Argument(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        Ok(())
    }
}

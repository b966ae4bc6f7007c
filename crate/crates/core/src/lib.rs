//! Hate and offensive speech detection for low-resource languages.
//!
//! The pipeline cleans social-media posts, trains one bidirectional-LSTM
//! attention classifier per cross-validation fold, averages the fold models
//! at inference time and scores predictions with macro-averaged F1.

pub mod cli;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod fsutil;
pub mod model;
pub mod pipeline;
pub mod preprocess;
pub mod rng;
pub mod train;

pub use error::{Error, Result};

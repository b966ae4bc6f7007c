//! Synthetic keyword-labeled corpora.
//!
//! Real shared-task data cannot be redistributed, so tests and demos use
//! generated posts: a post is HOF exactly when it contains one of a fixed set
//! of marker words, before optional label noise is applied. Posts mix Latin,
//! Bengali, Sinhala and Gujarati words with mentions, emoji, hashtags and
//! repeated punctuation so that every cleaning step is exercised.

use std::path::Path;

use crate::corpus::{Dataset, Label, Sample};
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::rng::SplitMix64;

pub const MARKERS: [&str; 6] = ["idiot", "disgusting", "trash", "stupid", "scum", "loser"];

const NEUTRAL: [&str; 36] = [
    "the", "match", "today", "was", "great", "rain", "village", "market", "school", "song", "river", "train",
    "morning", "friends", "food", "festival", "news", "cricket", "ভালো", "আজ", "খেলা", "বৃষ্টি", "গান", "বন্ধু",
    "අද", "හොඳයි", "ගීතය", "මිතුරා", "ගම", "વરસાદ", "આજે", "સરસ", "ગીત", "મિત્ર", "શાળા", "ભોજન",
];

const HASHTAGS: [&str; 4] = ["#GoodMorning", "#MatchDay", "#NewsToday", "#RainyDay"];
const EMOJI: [&str; 4] = ["😂", "🙏🏽", "👍", "❤️"];
const PUNCT: [&str; 4] = ["!!!", "...", "??", "!"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixtureConfig {
    pub n: usize,
    /// Fraction of labels flipped after generation, in [0, 1].
    pub noise: f64,
    pub seed: u64,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        FixtureConfig {
            n: 500,
            noise: 0.0,
            seed: 2023,
        }
    }
}

fn pick<'a>(rng: &mut SplitMix64, pool: &[&'a str]) -> &'a str {
    pool[rng.below(pool.len() as u64) as usize]
}

/// Alternating classes; ids are `{prefix}{index}`.
pub fn generate(cfg: &FixtureConfig, id_prefix: &str) -> Result<Dataset> {
    if !(0.0..=1.0).contains(&cfg.noise) {
        return Err(Error::Argument(format!("noise must lie in [0, 1], got {}", cfg.noise)));
    }
    let mut rng = SplitMix64::new(cfg.seed);
    let mut samples = Vec::with_capacity(cfg.n);
    for i in 0..cfg.n {
        let hof = i % 2 == 0;
        let len = 4 + rng.below(5) as usize;
        let mut words: Vec<String> = (0..len).map(|_| pick(&mut rng, &NEUTRAL).to_string()).collect();
        if hof {
            let at = rng.below(len as u64 + 1) as usize;
            let mut marker = pick(&mut rng, &MARKERS).to_string();
            if rng.below(3) == 0 {
                marker = marker.to_uppercase();
            }
            words.insert(at, marker);
        }
        if rng.below(3) == 0 {
            words.insert(0, "@USER".into());
        }
        if rng.below(3) == 0 {
            words.push(pick(&mut rng, &HASHTAGS).into());
        }
        if rng.below(3) == 0 {
            let at = rng.below(words.len() as u64 + 1) as usize;
            words.insert(at, pick(&mut rng, &EMOJI).into());
        }
        let mut text = words.join(" ");
        if rng.below(2) == 0 {
            text.push_str(pick(&mut rng, &PUNCT));
        }
        let mut label = if hof { Label::Hof } else { Label::Not };
        if rng.next_f64() < cfg.noise {
            label = Label::from_code(1 - label.code()).unwrap();
        }
        samples.push(Sample::new(format!("{id_prefix}{i}"), text, Some(label)));
    }
    Dataset::new(samples, "synthetic")
}

/// CSV with the default column names.
pub fn to_csv(dataset: &Dataset) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["tweet_id", "text", "label"])?;
    for s in &dataset.samples {
        w.write_record([s.id.as_str(), s.text.as_str(), s.label.map_or("", Label::name)])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Argument(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn write_fixture(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path, to_csv(dataset)?.as_bytes())
}

/// `id,label` gold file.
pub fn gold_csv(dataset: &Dataset) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "label"])?;
    for s in &dataset.samples {
        w.write_record([s.id.as_str(), s.label.map_or("", Label::name)])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Argument(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

//! Hashtag segmentation by unigram maximum likelihood.
//!
//! A body is split at the boundaries maximizing `Σ ln score(w)`, where a
//! known word scores `count / total` and an unknown word of `n` characters
//! scores `10 / (total · 10ⁿ)`, so long unknown strings are penalized
//! geometrically.

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use crate::error::{Error, Result};

const BUNDLED: &str = include_str!("../../data/unigrams.tsv");

#[derive(Debug, Clone, Default, PartialEq)]
pub struct UnigramTable {
    counts: HashMap<String, u64>,
    total: u64,
    max_word_len: usize,
}

impl UnigramTable {
    /// A small English frequency list shipped with the crate.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED).expect("bundled unigram table is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// `<word>\t<count>` per line. Words are lowercased; repeated words add up.
    pub fn parse(text: &str) -> Result<Self> {
        let mut table = UnigramTable::default();
        for (i, line) in text.as_bytes().lines().enumerate() {
            let format = |message: String| Error::Format { line: i + 1, message };
            let line = line.map_err(|e| format(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let (word, count) = line
                .split_once('\t')
                .ok_or_else(|| format("expected `<word>\\t<count>`".into()))?;
            let count: u64 = count
                .trim()
                .parse()
                .map_err(|_| format(format!("bad count `{}`", count.trim())))?;
            if word.is_empty() || count == 0 {
                return Err(format("word must be nonempty and count positive".into()));
            }
            table.add(&word.to_lowercase(), count);
        }
        Ok(table)
    }

    pub fn from_counts<'a>(counts: impl IntoIterator<Item = (&'a str, u64)>) -> Self {
        let mut table = UnigramTable::default();
        for (word, count) in counts {
            if count > 0 {
                table.add(&word.to_lowercase(), count);
            }
        }
        table
    }

    fn add(&mut self, word: &str, count: u64) {
        *self.counts.entry(word.to_string()).or_insert(0) += count;
        self.total += count;
        self.max_word_len = self.max_word_len.max(word.chars().count());
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn max_word_len(&self) -> usize {
        self.max_word_len
    }

    pub fn count(&self, word: &str) -> Option<u64> {
        self.counts.get(word).copied()
    }

    /// Natural-log score of a single word. Undefined (−∞) for an empty table.
    pub fn log_score(&self, word: &str) -> f64 {
        let total = (self.total as f64).ln();
        match self.counts.get(word) {
            Some(&c) => (c as f64).ln() - total,
            None => std::f64::consts::LN_10 * (1.0 - word.chars().count() as f64) - total,
        }
    }

    pub fn segmentation_score<S: AsRef<str>>(&self, words: &[S]) -> f64 {
        words.iter().map(|w| self.log_score(w.as_ref())).sum()
    }
}

/// Splits a `#hashtag` into words. Latin letters are lowercased first.
/// Bodies without any alphabetic character, and any body when the table is
/// empty, come back whole.
pub fn segment_hashtag(tag: &str, table: &UnigramTable) -> Vec<String> {
    let body = super::text::lowercase_latin(tag.strip_prefix('#').unwrap_or(tag));
    if body.is_empty() {
        return Vec::new();
    }
    if table.total == 0 || !body.chars().any(char::is_alphabetic) {
        return vec![body];
    }

    let bounds: Vec<usize> = body
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(body.len()))
        .collect();
    let n = bounds.len() - 1;

    // best[i]: best score of body[..bounds[i]]; back[i]: start of its last word.
    let mut best = vec![f64::NEG_INFINITY; n + 1];
    let mut back = vec![0usize; n + 1];
    best[0] = 0.0;
    for end in 1..=n {
        for start in 0..end {
            let word = &body[bounds[start]..bounds[end]];
            let score = best[start] + table.log_score(word);
            if score > best[end] {
                best[end] = score;
                back[end] = start;
            }
        }
    }

    let mut words = Vec::new();
    let mut end = n;
    while end > 0 {
        let start = back[end];
        words.push(body[bounds[start]..bounds[end]].to_string());
        end = start;
    }
    words.reverse();
    words
}

#[cfg(test)]
pub(crate) mod oracle {
    use super::UnigramTable;

    /// Every segmentation of `body`, by enumerating all 2^(n-1) cut masks.
    pub fn all_segmentations(body: &str) -> Vec<Vec<String>> {
        let chars: Vec<char> = body.chars().collect();
        let n = chars.len();
        if n == 0 {
            return vec![Vec::new()];
        }
        (0u32..1 << (n - 1))
            .map(|mask| {
                let mut words = Vec::new();
                let mut current = String::new();
                for (i, &c) in chars.iter().enumerate() {
                    current.push(c);
                    if i + 1 < n && mask & (1 << i) != 0 {
                        words.push(std::mem::take(&mut current));
                    }
                }
                words.push(current);
                words
            })
            .collect()
    }

    pub fn best_score(body: &str, table: &UnigramTable) -> f64 {
        all_segmentations(body)
            .iter()
            .map(|s| table.segmentation_score(s))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fixture() -> UnigramTable {
        UnigramTable::from_counts([
            ("ban", 100),
            ("social", 80),
            ("media", 90),
            ("so", 50),
            ("cial", 1),
            ("me", 60),
            ("dia", 5),
            ("a", 40),
            ("hate", 70),
        ])
    }

    #[test]
    fn splits_known_words() {
        let t = fixture();
        assert_eq!(segment_hashtag("#BanSocialMedia", &t), ["ban", "social", "media"]);
        let dp = t.segmentation_score(&segment_hashtag("#BanSocialMedia", &t));
        assert!((dp - oracle::best_score("bansocialmedia", &t)).abs() < 1e-9);
    }

    #[test]
    fn degenerate_bodies() {
        let t = fixture();
        assert_eq!(segment_hashtag("#2023", &t), ["2023"]);
        assert_eq!(segment_hashtag("#abc", &UnigramTable::default()), ["abc"]);
        assert!(segment_hashtag("#", &t).is_empty());
        assert_eq!(segment_hashtag("#বাংলা", &t), ["বাংলা"]);
    }

    #[test]
    fn single_unknown_beats_splits_when_total_exceeds_ten() {
        let t = fixture();
        assert_eq!(segment_hashtag("#xyz", &t), ["xyz"]);
        assert_eq!(oracle::best_score("xyz", &t), t.log_score("xyz"));
    }

    #[test]
    fn parse_errors_carry_line() {
        assert!(matches!(UnigramTable::parse("a\t1\nb\tx\n"), Err(Error::Format { line: 2, .. })));
        assert!(matches!(UnigramTable::parse("a 1\n"), Err(Error::Format { line: 1, .. })));
        let t = UnigramTable::parse("A\t2\na\t3\n").unwrap();
        assert_eq!((t.count("a"), t.total()), (Some(5), 5));
    }

    #[test]
    fn bundled_table_segments_common_tags() {
        let t = UnigramTable::bundled();
        assert_eq!(segment_hashtag("#BanHate", &t), ["ban", "hate"]);
        assert_eq!(segment_hashtag("#StopRacism", &t), ["stop", "racism"]);
    }

    proptest! {
        #[test]
        fn matches_exhaustive_enumeration(body in "[a-z]{1,12}") {
            let t = fixture();
            let words = segment_hashtag(&format!("#{body}"), &t);
            prop_assert_eq!(words.concat(), body.clone());
            let best = oracle::best_score(&body, &t);
            prop_assert!((t.segmentation_score(&words) - best).abs() <= 1e-9 * best.abs().max(1.0));
        }

        #[test]
        fn reconcatenates(body in "[A-Za-z0-9_\u{0980}-\u{09FF}]{1,30}") {
            let words = segment_hashtag(&format!("#{body}"), &fixture());
            prop_assert_eq!(words.concat(), crate::preprocess::text::lowercase_latin(&body));
        }
    }
}

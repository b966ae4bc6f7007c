//! Post cleaning, hashtag segmentation, tokenization and sequence encoding.
//!
//! [`clean`] applies, in order: mention removal, emoji expansion,
//! punctuation-run collapsing, inline hashtag segmentation, tokenization and
//! Latin lowercasing. Its output is a fixed point: re-cleaning the
//! space-joined tokens gives the same tokens back.

mod emoji;
mod segment;
pub mod text;
mod vocab;

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

pub use emoji::{expand_emoji, EmojiTable};
pub use segment::{segment_hashtag, UnigramTable};
pub use text::{collapse_punct, strip_usernames, tokenize};
pub use vocab::{build_vocab, encode, encode_or_unk, EncodedSample, Vocab, PAD, PAD_TOKEN, UNK, UNK_TOKEN};

static HASHTAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"#\w+").unwrap());

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CleanConfig {
    pub strip_usernames: bool,
    pub collapse_punct: bool,
    pub expand_emoji: bool,
    pub segment_hashtags: bool,
    pub lowercase_latin: bool,
}

impl Default for CleanConfig {
    fn default() -> Self {
        CleanConfig {
            strip_usernames: true,
            collapse_punct: true,
            expand_emoji: true,
            segment_hashtags: true,
            lowercase_latin: true,
        }
    }
}

/// Replaces every `#word` by its segments, space separated.
pub fn segment_hashtags_inline(text: &str, table: &UnigramTable) -> String {
    HASHTAG
        .replace_all(text, |caps: &regex::Captures<'_>| {
            format!(" {} ", segment_hashtag(&caps[0], table).join(" "))
        })
        .into_owned()
}

pub fn clean(text: &str, cfg: &CleanConfig, emoji: &EmojiTable, unigrams: &UnigramTable) -> Vec<String> {
    let mut s = text.to_string();
    if cfg.strip_usernames {
        s = strip_usernames(&s);
    }
    if cfg.expand_emoji {
        s = expand_emoji(&s, emoji);
    }
    if cfg.collapse_punct {
        s = collapse_punct(&s);
    }
    if cfg.segment_hashtags {
        s = segment_hashtags_inline(&s, unigrams);
    }
    let mut tokens = tokenize(&s);
    if cfg.lowercase_latin {
        for tok in &mut tokens {
            *tok = text::lowercase_latin(tok);
        }
    }
    tokens
}

/// Cleaning config plus the resource tables it needs, bundled for reuse.
#[derive(Debug, Clone)]
pub struct Preprocessor {
    pub config: CleanConfig,
    pub emoji: EmojiTable,
    pub unigrams: UnigramTable,
}

impl Preprocessor {
    pub fn new(config: CleanConfig, emoji: EmojiTable, unigrams: UnigramTable) -> Self {
        Preprocessor {
            config,
            emoji,
            unigrams,
        }
    }

    /// Default config with the bundled emoji and unigram tables.
    pub fn bundled() -> Self {
        Self::new(CleanConfig::default(), EmojiTable::bundled(), UnigramTable::bundled())
    }

    pub fn clean(&self, text: &str) -> Vec<String> {
        clean(text, &self.config, &self.emoji, &self.unigrams)
    }
}

#[cfg(test)]
pub(crate) mod testgen {
    use crate::rng::SplitMix64;

    const POOLS: &[&[char]] = &[
        &['a', 'B', 'z', 'Q', 'é', 'İ', 'ß', 'K', '0', '7'],
        &['অ', 'ক', 'া', 'ি', '্', 'ৎ', '৩', '।'],
        &['අ', 'ක', 'ා', '්', 'ශ', 'ර', 'ී', '\u{200D}'],
        &['અ', 'ક', 'ા', '્', 'ગ', '૩', '૰'],
        &['😂', '👍', '🏽', '❤', '\u{FE0F}', '🦄', '🇮', '🇳', '\u{200D}', '©'],
        &['!', '?', '.', '.', '#', '#', '@', '_', '-', ',', '"', '…', '‼'],
        &[' ', ' ', '\t', '\n', '\u{00A0}'],
    ];

    /// Random mixed-script string, including mentions and hashtags.
    pub fn random_text(rng: &mut SplitMix64) -> String {
        let len = rng.below(40) as usize;
        let mut s = String::new();
        for _ in 0..len {
            let pool = POOLS[rng.below(POOLS.len() as u64) as usize];
            s.push(pool[rng.below(pool.len() as u64) as usize]);
        }
        s
    }
}

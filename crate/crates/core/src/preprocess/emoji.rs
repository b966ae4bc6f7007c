use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;

use crate::error::{Error, Result};

/// Characters that can open an emoji sequence.
static EMOJI_START: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\p{Extended_Pictographic}|\p{Regional_Indicator}|\p{Emoji_Modifier}").unwrap()
});

/// One full emoji sequence, anchored: flag pairs, or a pictograph with its
/// presentation selector, skin tone, tag characters, ZWJ continuations and keycap.
static EMOJI_SEQUENCE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(concat!(
        r"^(?:\p{Regional_Indicator}\p{Regional_Indicator}?",
        r"|(?:\p{Extended_Pictographic}|\p{Emoji_Modifier})[\x{FE0E}\x{FE0F}]?\p{Emoji_Modifier}?[\x{E0020}-\x{E007F}]*",
        r"(?:\x{200D}\p{Extended_Pictographic}[\x{FE0E}\x{FE0F}]?\p{Emoji_Modifier}?)*\x{20E3}?)"
    ))
    .unwrap()
});

static DESCRIPTION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^[a-z0-9_]+$").unwrap());

const BUNDLED: &str = include_str!("../../data/emoji.tsv");

/// Emoji sequence to textual description, e.g. 😂 to `face_with_tears_of_joy`.
#[derive(Debug, Clone, Default)]
pub struct EmojiTable {
    entries: HashMap<String, String>,
    max_key_chars: usize,
}

impl EmojiTable {
    /// The table shipped with the crate (Unicode names of ~1.5k emoji plus
    /// a few skin-tone, flag and ZWJ sequences).
    pub fn bundled() -> Self {
        Self::parse(BUNDLED).expect("bundled emoji table is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// `<emoji>\t<description>` per line. Blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut table = EmojiTable::default();
        for (i, line) in text.as_bytes().lines().enumerate() {
            let line = line.map_err(|e| Error::Format {
                line: i + 1,
                message: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let (key, desc) = line.split_once('\t').ok_or_else(|| Error::Format {
                line: i + 1,
                message: "expected `<emoji>\\t<description>`".into(),
            })?;
            table.insert(key, desc.trim()).map_err(|message| Error::Format {
                line: i + 1,
                message,
            })?;
        }
        Ok(table)
    }

    /// Keys must start with an emoji character and contain no whitespace;
    /// descriptions are lowercase ASCII words joined by underscores.
    pub fn insert(&mut self, key: &str, description: &str) -> std::result::Result<(), String> {
        if key.is_empty() || key.chars().any(char::is_whitespace) {
            return Err(format!("invalid emoji key {key:?}"));
        }
        if EMOJI_START.find(key).map(|m| m.start()) != Some(0) {
            return Err(format!("key {key:?} does not start with an emoji"));
        }
        if !DESCRIPTION.is_match(description) {
            return Err(format!("description {description:?} must match [a-z0-9_]+"));
        }
        self.max_key_chars = self.max_key_chars.max(key.chars().count());
        self.entries.insert(key.to_string(), description.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Longest key that is a prefix of `text`, with its byte length.
    fn longest_match<'a>(&'a self, text: &str) -> Option<(usize, &'a str)> {
        let ends: Vec<usize> = text
            .char_indices()
            .skip(1)
            .map(|(i, _)| i)
            .chain(std::iter::once(text.len()))
            .take(self.max_key_chars)
            .collect();
        ends.into_iter()
            .rev()
            .find_map(|end| self.get(&text[..end]).map(|d| (end, d)))
    }
}

/// Replaces known emoji with ` description `, drops unknown emoji sequences,
/// and normalizes whitespace.
pub fn expand_emoji(text: &str, table: &EmojiTable) -> String {
    let mut out = String::with_capacity(text.len() + 16);
    let mut pos = 0;
    while let Some(m) = EMOJI_START.find_at(text, pos) {
        out.push_str(&text[pos..m.start()]);
        let rest = &text[m.start()..];
        let consumed = match table.longest_match(rest) {
            Some((len, desc)) => {
                out.push(' ');
                out.push_str(desc);
                out.push(' ');
                len
            }
            None => {
                out.push(' ');
                EMOJI_SEQUENCE.find(rest).map_or(m.len(), |s| s.end())
            }
        };
        pos = m.start() + consumed;
    }
    out.push_str(&text[pos..]);
    super::text::normalize_whitespace(&out)
}

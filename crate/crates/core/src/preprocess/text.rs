//! Character-level cleaning steps and the word/punctuation tokenizer.

use std::sync::LazyLock;

use regex::Regex;

static MENTION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"@\w+").unwrap());
static PUNCT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\p{P}$").unwrap());
static CONNECTOR: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\p{Pc}$").unwrap());
static LATIN_RUN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\p{Latin}+").unwrap());

fn char_matches(re: &Regex, c: char) -> bool {
    let mut buf = [0u8; 4];
    re.is_match(c.encode_utf8(&mut buf))
}

/// Unicode general category P (any punctuation, connectors included).
pub fn is_punct(c: char) -> bool {
    if c.is_ascii() {
        // ASCII symbols (category S) are not punctuation.
        return c.is_ascii_punctuation()
            && !matches!(c, '$' | '+' | '<' | '=' | '>' | '^' | '`' | '|' | '~');
    }
    char_matches(&PUNCT, c)
}

/// Punctuation that the tokenizer splits off. Connector punctuation (`_`)
/// stays inside words so emoji descriptions survive as single tokens.
pub fn is_split_punct(c: char) -> bool {
    if c.is_ascii() {
        return c != '_' && is_punct(c);
    }
    is_punct(c) && !char_matches(&CONNECTOR, c)
}

/// Joins whitespace-separated pieces with single spaces and trims the ends.
pub fn normalize_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for piece in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(piece);
    }
    out
}

/// Removes `@` mentions (including the `@USER` placeholder).
pub fn strip_usernames(text: &str) -> String {
    normalize_whitespace(&MENTION.replace_all(text, " "))
}

/// Replaces each run of two or more identical punctuation characters by one.
/// Mixed runs such as `?!` are left alone.
pub fn collapse_punct(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut prev: Option<char> = None;
    for c in text.chars() {
        if prev == Some(c) && is_punct(c) {
            continue;
        }
        out.push(c);
        prev = Some(c);
    }
    out
}

/// Lowercases Latin-script runs; other scripts pass through untouched.
pub fn lowercase_latin(text: &str) -> String {
    LATIN_RUN
        .replace_all(text, |caps: &regex::Captures<'_>| caps[0].to_lowercase())
        .into_owned()
}

/// Whitespace split, then every non-connector punctuation character becomes
/// its own token.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        let mut word = String::new();
        for c in chunk.chars() {
            if is_split_punct(c) {
                if !word.is_empty() {
                    tokens.push(std::mem::take(&mut word));
                }
                tokens.push(c.to_string());
            } else {
                word.push(c);
            }
        }
        if !word.is_empty() {
            tokens.push(word);
        }
    }
    tokens
}

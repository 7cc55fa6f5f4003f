//! Sentence segmentation and string normalization helpers.

use alloc::string::String;
use alloc::vec::Vec;

use unicode_normalization::UnicodeNormalization;

/// Maximum length of an aspect name, in characters.
pub const MAX_ASPECT_NAME_CHARS: usize = 60;

const JA_TERMINATORS: &[char] = &['。', '！', '？'];
const ASCII_TERMINATORS: &[char] = &['.', '!', '?'];
const CLOSERS: &[char] = &['」', '』', '）', '】', '〉', '》', '"', '\'', ')', ']', '”', '’'];

/// Split text into sentences.
///
/// Boundaries fall after 。！？ (plus any trailing terminators or closing
/// brackets), after ASCII `.!?` when followed by whitespace, and at every
/// hard newline. Whitespace inside a sentence is collapsed to one space and
/// empty sentences are dropped, so no non-whitespace character is lost or
/// duplicated.
pub fn segment_sentences(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut buf = String::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' || c == '\r' {
            flush(&mut buf, &mut out);
            i += 1;
            continue;
        }
        buf.push(c);
        i += 1;
        let ja = JA_TERMINATORS.contains(&c);
        let ascii = ASCII_TERMINATORS.contains(&c);
        if !(ja || ascii) {
            continue;
        }
        while i < chars.len()
            && (JA_TERMINATORS.contains(&chars[i])
                || ASCII_TERMINATORS.contains(&chars[i])
                || CLOSERS.contains(&chars[i]))
        {
            buf.push(chars[i]);
            i += 1;
        }
        if ja || i >= chars.len() || chars[i].is_whitespace() {
            flush(&mut buf, &mut out);
        }
    }
    flush(&mut buf, &mut out);
    out
}

fn flush(buf: &mut String, out: &mut Vec<String>) {
    let s = collapse_whitespace(buf);
    if !s.is_empty() {
        out.push(s);
    }
    buf.clear();
}

/// Collapse whitespace runs to a single ASCII space and trim both ends.
pub fn collapse_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Key used to decide whether two aspect names are the same:
/// NFKC, lower-cased, inner whitespace collapsed.
pub fn normalize_aspect_name(name: &str) -> String {
    let nfkc: String = name.nfkc().collect();
    collapse_whitespace(&nfkc.to_lowercase())
}

/// Case- and width-insensitive substring test used for alias matching.
pub fn contains_alias(text: &str, alias: &str) -> bool {
    let alias = fold(alias);
    !alias.is_empty() && fold(text).contains(&alias)
}

fn fold(s: &str) -> String {
    let nfkc: String = s.nfkc().collect();
    nfkc.to_lowercase()
}

const QUOTE_PAIRS: &[(char, char)] =
    &[('"', '"'), ('\'', '\''), ('“', '”'), ('‘', '’'), ('「', '」'), ('『', '』'), ('`', '`'), ('*', '*')];
const TRAILING_PUNCT: &[char] = &['.', '。', '!', '！', '?', '？', ':', '：', ';', '；', ',', '、'];

/// Clean a model-proposed aspect name.
///
/// Takes the first non-empty line, strips wrapping quotes and trailing
/// punctuation, and truncates to [`MAX_ASPECT_NAME_CHARS`] at a word
/// boundary where one exists. Returns the name and whether it was truncated.
pub fn clean_aspect_name(raw: &str) -> (String, bool) {
    let line = raw.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("");
    let mut name = collapse_whitespace(line);
    loop {
        let before = name.clone();
        let trimmed = name.trim_end_matches(TRAILING_PUNCT).trim();
        name = String::from(trimmed);
        for &(open, close) in QUOTE_PAIRS {
            let mut it = name.chars();
            if name.chars().count() >= 2 && it.next() == Some(open) && it.next_back() == Some(close) {
                let inner: String = name.chars().skip(1).take(name.chars().count() - 2).collect();
                name = String::from(inner.trim());
            }
        }
        if name == before {
            break;
        }
    }
    if name.chars().count() <= MAX_ASPECT_NAME_CHARS {
        return (name, false);
    }
    (truncate_at_word(&name, MAX_ASPECT_NAME_CHARS), true)
}

fn truncate_at_word(s: &str, max: usize) -> String {
    let chars: Vec<char> = s.chars().collect();
    let mut cut = max;
    if !chars[max].is_whitespace() {
        if let Some(pos) = chars[..max].iter().rposition(|c| c.is_whitespace()) {
            if pos > 0 {
                cut = pos;
            }
        }
    }
    let head: String = chars[..cut].iter().collect();
    String::from(head.trim_end().trim_end_matches(TRAILING_PUNCT).trim_end())
}

/// Truncate to at most `max` characters.
pub fn truncate_chars(s: &str, max: usize) -> String {
    s.chars().take(max).collect()
}

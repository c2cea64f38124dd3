//! Text normalization and repetition cleanup for raw ASR output.
//!
//! Letters are grapheme clusters, not code points: a Bengali consonant with
//! its vowel sign is one unit and is never split by the letter pass.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;
use unicode_segmentation::UnicodeSegmentation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnicodeForm {
    Nfc,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TextParamError {
    #[error("punctuation stripping enabled with an empty punctuation set")]
    EmptyPunctuationSet,
    #[error("{0} must be at least {1}")]
    TooSmall(&'static str, usize),
}

/// Characters removed by the default profile: ASCII punctuation, the danda
/// and double danda, and common typographic quotes and dashes.
pub const DEFAULT_PUNCTUATION: &str = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~।॥‘’“”–—…";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizationProfile {
    pub unicode_form: UnicodeForm,
    pub strip_punctuation: bool,
    pub punctuation_set: BTreeSet<char>,
    pub collapse_whitespace: bool,
}

impl Default for NormalizationProfile {
    fn default() -> Self {
        Self {
            unicode_form: UnicodeForm::Nfc,
            strip_punctuation: true,
            punctuation_set: DEFAULT_PUNCTUATION.chars().collect(),
            collapse_whitespace: true,
        }
    }
}

impl NormalizationProfile {
    pub fn validate(&self) -> Result<(), TextParamError> {
        if self.strip_punctuation && self.punctuation_set.is_empty() {
            return Err(TextParamError::EmptyPunctuationSet);
        }
        Ok(())
    }
}

/// Normal form, then punctuation to spaces, then whitespace collapse and trim.
pub fn normalize(text: &str, profile: &NormalizationProfile) -> String {
    let mut s: String = match profile.unicode_form {
        UnicodeForm::Nfc => text.nfc().collect(),
        UnicodeForm::None => String::from(text),
    };
    if profile.strip_punctuation {
        s = s
            .chars()
            .map(|c| if profile.punctuation_set.contains(&c) { ' ' } else { c })
            .collect();
    }
    if profile.collapse_whitespace {
        let mut out = String::with_capacity(s.len());
        for word in s.split_whitespace() {
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(word);
        }
        s = out;
    }
    s
}

/// Repetition limits. A run longer than its limit collapses to one copy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DedupParams {
    pub max_word_repeat: usize,
    pub max_phrase_len: usize,
    pub max_phrase_repeat: usize,
    pub max_char_repeat: usize,
}

impl Default for DedupParams {
    fn default() -> Self {
        Self {
            max_word_repeat: 2,
            max_phrase_len: 5,
            max_phrase_repeat: 1,
            max_char_repeat: 2,
        }
    }
}

impl DedupParams {
    pub fn validate(&self) -> Result<(), TextParamError> {
        if self.max_word_repeat < 1 {
            return Err(TextParamError::TooSmall("max_word_repeat", 1));
        }
        if self.max_phrase_len < 2 {
            return Err(TextParamError::TooSmall("max_phrase_len", 2));
        }
        if self.max_phrase_repeat < 1 {
            return Err(TextParamError::TooSmall("max_phrase_repeat", 1));
        }
        if self.max_char_repeat < 1 {
            return Err(TextParamError::TooSmall("max_char_repeat", 1));
        }
        Ok(())
    }
}

/// Collapses runs of one grapheme cluster longer than `max_char_repeat` to a
/// single cluster. Shorter runs are left alone.
pub fn dedup_chars(token: &str, max_char_repeat: usize) -> String {
    let graphemes: Vec<&str> = token.graphemes(true).collect();
    let mut out = String::with_capacity(token.len());
    let mut i = 0;
    while i < graphemes.len() {
        let g = graphemes[i];
        let run = graphemes[i..].iter().take_while(|&&x| x == g).count();
        if run > max_char_repeat {
            out.push_str(g);
        } else {
            for _ in 0..run {
                out.push_str(g);
            }
        }
        i += run;
    }
    out
}

/// Collapses runs of an identical token longer than `max_word_repeat` to one token.
pub fn dedup_words<T: AsRef<str> + Clone>(tokens: &[T], max_word_repeat: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(tokens.len());
    let mut i = 0;
    while i < tokens.len() {
        let t = tokens[i].as_ref();
        let run = tokens[i..].iter().take_while(|x| x.as_ref() == t).count();
        let keep = if run > max_word_repeat { 1 } else { run };
        out.extend(tokens[i..i + keep].iter().cloned());
        i += run;
    }
    out
}

/// True when `unit` is a whole power of a shorter block, e.g. `[a, a]` or `[a, b, a, b]`.
/// Such units are repetitions of something smaller and are left to shorter
/// phrase lengths or to the word pass.
fn is_periodic<T: AsRef<str>>(unit: &[T]) -> bool {
    let n = unit.len();
    (1..n)
        .filter(|p| n.is_multiple_of(*p))
        .any(|p| (p..n).all(|k| unit[k].as_ref() == unit[k - p].as_ref()))
}

fn same_ngram<T: AsRef<str>>(a: &[T], b: &[T]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.as_ref() == y.as_ref())
}

/// One greedy left-to-right pass at phrase length `n`.
fn collapse_ngram_runs<T: AsRef<str> + Clone>(tokens: &[T], n: usize, max_repeat: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(tokens.len());
    let mut i = 0;
    while i < tokens.len() {
        if i + n <= tokens.len() && !is_periodic(&tokens[i..i + n]) {
            let unit = &tokens[i..i + n];
            let mut copies = 1;
            while i + (copies + 1) * n <= tokens.len()
                && same_ngram(unit, &tokens[i + copies * n..i + (copies + 1) * n])
            {
                copies += 1;
            }
            if copies > max_repeat {
                out.extend(unit.iter().cloned());
                i += copies * n;
                continue;
            }
        }
        out.push(tokens[i].clone());
        i += 1;
    }
    out
}

/// Collapses consecutive repeats of n-grams, `max_phrase_len` down to 2, to a
/// single copy whenever a run exceeds `max_phrase_repeat`. Repeats until no
/// run is left. N-grams that are themselves periodic (`[w, w]`) are skipped so
/// that single-word runs are judged only by the word pass.
pub fn dedup_phrases<T: AsRef<str> + Clone>(tokens: &[T], params: &DedupParams) -> Vec<T> {
    let mut current: Vec<T> = tokens.to_vec();
    loop {
        let before = current.len();
        for n in (2..=params.max_phrase_len).rev() {
            current = collapse_ngram_runs(&current, n, params.max_phrase_repeat);
        }
        if current.len() == before {
            return current;
        }
    }
}

/// Whitespace-tokenize, then phrase, word and letter passes; the three passes
/// are repeated until stable, since a letter collapse can make two tokens
/// equal and a word collapse can align phrase copies. Tokens are rejoined with
/// single spaces.
pub fn clean_transcript(text: &str, params: &DedupParams) -> String {
    let mut tokens: Vec<String> = text.split_whitespace().map(String::from).collect();
    loop {
        let phrased = dedup_phrases(&tokens, params);
        let worded = dedup_words(&phrased, params.max_word_repeat);
        let lettered: Vec<String> = worded.iter().map(|t| dedup_chars(t, params.max_char_repeat)).collect();
        if lettered == tokens {
            break;
        }
        tokens = lettered;
    }
    tokens.join(" ")
}

//! Tokenization, stopword removal and stemming of a user's cleaned text.
//!
//! Pipeline order: Unicode word segmentation, punctuation removal, stopword
//! removal (case-insensitive), Snowball English stemming, lowercase output.
//! Numeric tokens are kept.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use rust_stemmers::{Algorithm, Stemmer};
use serde::Serialize;
use unicode_segmentation::UnicodeSegmentation;

use crate::{Error, Result};

/// Snowball English stopword list, one word per line.
pub const SNOWBALL_ENGLISH_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

/// Stemmer identifier recorded in run metadata.
pub const STEMMER_NAME: &str = "snowball-english (porter2, rust-stemmers 1.2)";

#[derive(Debug, Clone)]
pub struct StopWords {
    words: HashSet<String>,
}

impl StopWords {
    pub fn snowball_english() -> Self {
        Self::parse(SNOWBALL_ENGLISH_STOPWORDS)
    }

    /// Parse one word per line; blank lines and `#` comments are skipped.
    pub fn parse(list: &str) -> Self {
        let words = list
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| normalize_apostrophes(&l.to_lowercase()))
            .collect();
        StopWords { words }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    /// `word` must already be lowercase.
    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

impl Default for StopWords {
    fn default() -> Self {
        Self::snowball_english()
    }
}

fn normalize_apostrophes(s: &str) -> String {
    s.replace(['\u{2019}', '\u{2018}', '\u{02BC}'], "'")
}

/// Tokens of one user after preprocessing. Never empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TokenSequence {
    tokens: Vec<String>,
    n_types: usize,
}

impl TokenSequence {
    /// Returns `None` for an empty token list.
    pub fn new(tokens: Vec<String>) -> Option<Self> {
        if tokens.is_empty() {
            return None;
        }
        let n_types = tokens.iter().collect::<HashSet<_>>().len();
        Some(TokenSequence { tokens, n_types })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// N, the token count.
    pub fn n_tokens(&self) -> usize {
        self.tokens.len()
    }

    /// V, the number of distinct tokens.
    pub fn n_types(&self) -> usize {
        self.n_types
    }

    /// Occurrences of each type, in lexicographic order.
    pub fn type_counts(&self) -> BTreeMap<&str, u64> {
        let mut counts = BTreeMap::new();
        for t in &self.tokens {
            *counts.entry(t.as_str()).or_insert(0) += 1;
        }
        counts
    }
}

pub struct Preprocessor {
    stopwords: StopWords,
    stemmer: Stemmer,
}

impl Preprocessor {
    pub fn new(stopwords: StopWords) -> Self {
        Preprocessor {
            stopwords,
            stemmer: Stemmer::create(Algorithm::English),
        }
    }

    pub fn stopwords(&self) -> &StopWords {
        &self.stopwords
    }

    /// Run the full pipeline. `None` means no token survived; such users are
    /// excluded downstream.
    pub fn process(&self, text: &str) -> Option<TokenSequence> {
        let tokens = text
            .unicode_words()
            .filter_map(|word| {
                let word: String = normalize_apostrophes(word)
                    .chars()
                    .filter(|c| c.is_alphanumeric() || *c == '\'')
                    .collect::<String>()
                    .to_lowercase();
                let word = word.trim_matches('\'');
                if word.is_empty() || self.stopwords.contains(word) {
                    return None;
                }
                let stem = self.stemmer.stem(word);
                let stem = stem.trim_matches('\'');
                (!stem.is_empty()).then(|| stem.to_lowercase())
            })
            .collect();
        TokenSequence::new(tokens)
    }
}

impl Default for Preprocessor {
    fn default() -> Self {
        Self::new(StopWords::default())
    }
}

/// One-shot version of [`Preprocessor::process`].
pub fn preprocess_user_text(text: &str, stopwords: &StopWords) -> Option<TokenSequence> {
    Preprocessor::new(stopwords.clone()).process(text)
}

/// V(i, N): how many types occur exactly i times.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FrequencySpectrum {
    classes: BTreeMap<u64, u64>,
    n_tokens: u64,
    n_types: u64,
}

impl FrequencySpectrum {
    /// Build from per-type occurrence counts. Zero counts are ignored.
    pub fn from_type_counts(counts: impl IntoIterator<Item = u64>) -> Result<Self> {
        let mut classes = BTreeMap::new();
        for c in counts.into_iter().filter(|&c| c > 0) {
            *classes.entry(c).or_insert(0) += 1;
        }
        Self::from_classes(classes)
    }

    /// Build directly from a map i → V(i, N).
    pub fn from_classes(classes: impl IntoIterator<Item = (u64, u64)>) -> Result<Self> {
        let classes: BTreeMap<u64, u64> = classes
            .into_iter()
            .filter(|&(i, v)| i > 0 && v > 0)
            .collect();
        let n_tokens = classes.iter().map(|(i, v)| i * v).sum();
        let n_types = classes.values().sum();
        if n_tokens == 0 {
            return Err(Error::Empty("frequency spectrum"));
        }
        Ok(FrequencySpectrum {
            classes,
            n_tokens,
            n_types,
        })
    }

    pub fn classes(&self) -> &BTreeMap<u64, u64> {
        &self.classes
    }

    pub fn n_tokens(&self) -> u64 {
        self.n_tokens
    }

    pub fn n_types(&self) -> u64 {
        self.n_types
    }
}

pub fn frequency_spectrum(seq: &TokenSequence) -> Result<FrequencySpectrum> {
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for t in seq.tokens() {
        *counts.entry(t.as_str()).or_insert(0) += 1;
    }
    FrequencySpectrum::from_type_counts(counts.into_values())
}

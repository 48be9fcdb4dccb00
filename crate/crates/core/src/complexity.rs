//! Yule's K, gzip compression ratio and Flesch reading ease.

use std::io::Write;

use flate2::{Compression, GzBuilder};
use serde::Serialize;
use unicode_segmentation::UnicodeSegmentation;

use crate::textpipe::FrequencySpectrum;
use crate::{Error, Result};

/// Compression level used unless configured otherwise.
pub const DEFAULT_COMPRESSION_LEVEL: u32 = 6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexityScores {
    pub yule_k: f64,
    pub gzip_ratio: f64,
    pub flesch: f64,
    pub s_raw: usize,
    pub s_compressed: usize,
}

/// Yule's K = 10⁴ · (Σᵢ i²·V(i,N) − N) / N².
///
/// The sum is accumulated in integers, so the all-distinct case is exactly 0.
pub fn yule_k(spectrum: &FrequencySpectrum) -> f64 {
    let n = spectrum.n_tokens() as u128;
    let sum_sq: u128 = spectrum
        .classes()
        .iter()
        .map(|(&i, &v)| (i as u128) * (i as u128) * (v as u128))
        .sum();
    let n = n as f64;
    1e4 * ((sum_sq - spectrum.n_tokens() as u128) as f64) / (n * n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompressionRatio {
    pub ratio: f64,
    pub s_raw: usize,
    pub s_compressed: usize,
}

/// Gzip member size (header with zero mtime + DEFLATE stream + trailer).
pub fn gzip_size(bytes: &[u8], level: u32) -> usize {
    let mut encoder = GzBuilder::new()
        .mtime(0)
        .write(Vec::with_capacity(bytes.len() / 2 + 32), Compression::new(level));
    encoder
        .write_all(bytes)
        .expect("writing to a Vec cannot fail");
    encoder.finish().expect("writing to a Vec cannot fail").len()
}

/// Compressed-to-raw byte ratio of the UTF-8 text under gzip at `level`.
pub fn compression_ratio(text: &str, level: u32) -> Result<CompressionRatio> {
    let raw = text.as_bytes();
    if raw.is_empty() {
        return Err(Error::Empty("text for compression ratio"));
    }
    let s_compressed = gzip_size(raw, level);
    Ok(CompressionRatio {
        ratio: s_compressed as f64 / raw.len() as f64,
        s_raw: raw.len(),
        s_compressed,
    })
}

/// Heuristic English syllable count.
///
/// Rules, applied to the ASCII letters of the lowercased word:
///
/// 1. no letters → 1;
/// 2. count maximal runs of vowels `a e i o u`, plus `y` anywhere but the
///    first letter (so `io` is one syllable);
/// 3. final `e` is silent unless the word ends in `ee` or consonant + `le`;
/// 4. final `ed` is silent unless preceded by `t` or `d`;
/// 5. final `es` is silent unless preceded by `s x z c g`, by `ch`/`sh`, or
///    by consonant + `l`;
/// 6. rules 3–5 never take the count below 1.
pub fn count_syllables(word: &str) -> usize {
    let letters: Vec<u8> = word
        .bytes()
        .filter(u8::is_ascii_alphabetic)
        .map(|b| b.to_ascii_lowercase())
        .collect();
    if letters.is_empty() {
        return 1;
    }
    let is_vowel = |idx: usize| match letters[idx] {
        b'a' | b'e' | b'i' | b'o' | b'u' => true,
        b'y' => idx > 0,
        _ => false,
    };

    let mut count = 0;
    let mut in_run = false;
    for idx in 0..letters.len() {
        let v = is_vowel(idx);
        if v && !in_run {
            count += 1;
        }
        in_run = v;
    }

    let len = letters.len();
    let ends_with = |suffix: &[u8]| letters.ends_with(suffix);
    let consonant_at = |idx: usize| !is_vowel(idx);

    let silent = if ends_with(b"e") {
        let double_e = ends_with(b"ee");
        let consonant_le = ends_with(b"le") && len >= 3 && consonant_at(len - 3);
        !double_e && !consonant_le
    } else if ends_with(b"ed") && len >= 3 {
        !matches!(letters[len - 3], b't' | b'd')
    } else if ends_with(b"es") && len >= 3 {
        let before = letters[len - 3];
        let sibilant = matches!(before, b's' | b'x' | b'z' | b'c' | b'g');
        let digraph = before == b'h' && len >= 4 && matches!(letters[len - 4], b'c' | b's');
        let consonant_les = before == b'l' && len >= 4 && consonant_at(len - 4);
        !sibilant && !digraph && !consonant_les
    } else {
        false
    };

    if silent && count > 1 {
        count -= 1;
    }
    count.max(1)
}

/// Abbreviations that do not end a sentence when followed by a period.
pub const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "mt", "vs", "etc", "e.g", "i.e", "inc",
    "ltd", "co", "corp", "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct",
    "nov", "dec", "gen", "gov", "sen", "rep", "lt", "col", "sgt", "capt", "u.s", "u.k", "a.m",
    "p.m", "approx", "dept", "est", "fig",
];

fn is_abbreviation(segment: &str) -> bool {
    let last = segment.split_whitespace().last().unwrap_or("");
    let last = last.trim_start_matches(|c: char| !c.is_alphanumeric());
    let last = last.strip_suffix('.').unwrap_or(last).to_lowercase();
    ABBREVIATIONS.contains(&last.as_str())
}

/// Split text into sentences.
///
/// A sentence ends at a run of `.`, `!` or `?` followed by whitespace or the
/// end of text, unless the run is a single `.` closing a known abbreviation.
/// Line breaks also end a sentence, since concatenated tweets are joined by
/// newlines. Blank segments are dropped.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut sentences = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();

    fn push<'a>(text: &'a str, from: usize, to: usize, out: &mut Vec<&'a str>) {
        let s = text[from..to].trim();
        if !s.is_empty() {
            out.push(s);
        }
    }

    while let Some((idx, c)) = chars.next() {
        if c == '\n' {
            push(text, start, idx, &mut sentences);
            start = idx + 1;
            continue;
        }
        if !matches!(c, '.' | '!' | '?') {
            continue;
        }
        let mut end = idx + c.len_utf8();
        let mut only_period = c == '.';
        while let Some(&(j, d)) = chars.peek() {
            if matches!(d, '.' | '!' | '?') {
                only_period &= d == '.';
                end = j + d.len_utf8();
                chars.next();
            } else {
                break;
            }
        }
        let single_period = only_period && end - idx == 1;
        let at_boundary = text[end..].chars().next().is_none_or(char::is_whitespace);
        if !at_boundary {
            continue;
        }
        if single_period && is_abbreviation(&text[start..end]) {
            continue;
        }
        push(text, start, end, &mut sentences);
        start = end;
    }
    push(text, start, text.len(), &mut sentences);
    sentences
}

/// Word, sentence and syllable counts feeding the Flesch formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ReadabilityCounts {
    pub words: usize,
    pub sentences: usize,
    pub syllables: usize,
}

impl ReadabilityCounts {
    pub fn of(text: &str) -> Self {
        let mut words = 0;
        let mut syllables = 0;
        for w in text.unicode_words() {
            words += 1;
            syllables += count_syllables(w);
        }
        ReadabilityCounts {
            words,
            sentences: split_sentences(text).len(),
            syllables,
        }
    }

    pub fn flesch(&self) -> Result<f64> {
        if self.words == 0 {
            return Err(Error::Empty("words for Flesch index"));
        }
        let sentences = self.sentences.max(1) as f64;
        let words = self.words as f64;
        Ok(206.835 - 1.015 * (words / sentences) - 84.6 * (self.syllables as f64 / words))
    }
}

/// Flesch reading ease of `text`.
pub fn flesch_index(text: &str) -> Result<f64> {
    ReadabilityCounts::of(text).flesch()
}

/// All three scores for one user: Yule's K on the preprocessed spectrum,
/// gzip and Flesch on the cleaned text.
pub fn score_user(
    cleaned_text: &str,
    spectrum: &FrequencySpectrum,
    compression_level: u32,
) -> Result<ComplexityScores> {
    let gz = compression_ratio(cleaned_text, compression_level)?;
    Ok(ComplexityScores {
        yule_k: yule_k(spectrum),
        gzip_ratio: gz.ratio,
        flesch: flesch_index(cleaned_text)?,
        s_raw: gz.s_raw,
        s_compressed: gz.s_compressed,
    })
}

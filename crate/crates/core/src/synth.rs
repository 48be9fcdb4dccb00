//! Synthetic corpora with planted block structure.
//!
//! Every block owns a private vocabulary and all blocks share a common one.
//! A token comes from the block vocabulary with probability `block_mixing`
//! and from the shared vocabulary otherwise; within a vocabulary, words are
//! drawn from a Zipf rank-frequency law. Generated words are lowercase
//! ASCII ending in `x`, which the stemmer leaves untouched and which never
//! collide with stopwords, so the preprocessed types are exactly the
//! generated words.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ingest::{
    attach_labels, AccountType, LabeledCorpus, PoliticalLeaning, Reliability, Sentiment, Tweet, TweetLabels,
    UserLabels, CORPUS_LANGUAGE,
};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockLabels {
    pub account_type: AccountType,
    pub political_leaning: PoliticalLeaning,
    pub reliability: Reliability,
    /// Probability that a tweet is labeled Negative.
    pub negative_rate: f64,
    /// Probability that a tweet is labeled offensive.
    pub offensive_rate: f64,
}

impl BlockLabels {
    /// Label table cycled over blocks.
    pub fn defaults() -> Vec<BlockLabels> {
        vec![
            BlockLabels {
                account_type: AccountType::Individual,
                political_leaning: PoliticalLeaning::Left,
                reliability: Reliability::Reliable,
                negative_rate: 0.2,
                offensive_rate: 0.02,
            },
            BlockLabels {
                account_type: AccountType::Organization,
                political_leaning: PoliticalLeaning::Right,
                reliability: Reliability::Questionable,
                negative_rate: 0.5,
                offensive_rate: 0.15,
            },
            BlockLabels {
                account_type: AccountType::Individual,
                political_leaning: PoliticalLeaning::Center,
                reliability: Reliability::Reliable,
                negative_rate: 0.3,
                offensive_rate: 0.05,
            },
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_blocks: usize,
    pub users_per_block: usize,
    pub shared_vocab: usize,
    pub block_vocab: usize,
    /// Inclusive range; counts are drawn log-uniformly.
    pub tweets_per_user: (usize, usize),
    /// Inclusive range; counts are drawn uniformly.
    pub tokens_per_tweet: (usize, usize),
    /// Probability that a token is drawn from the block vocabulary.
    pub block_mixing: f64,
    pub zipf_exponent: f64,
    /// Per-block Zipf exponents, overriding `zipf_exponent`; used to plant
    /// a complexity difference between blocks.
    pub block_zipf_exponents: Option<Vec<f64>>,
    /// When false, no word repeats within a tweet.
    pub with_replacement: bool,
    pub labels: Vec<BlockLabels>,
    /// Permute user labels across all users, breaking the block/label link.
    pub shuffle_labels: bool,
    /// Probability that a tweet carries a hashtag, mention, URL or emoji.
    pub markup_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_blocks: 2,
            users_per_block: 20,
            shared_vocab: 300,
            block_vocab: 600,
            tweets_per_user: (20, 60),
            tokens_per_tweet: (8, 16),
            block_mixing: 0.9,
            zipf_exponent: 1.1,
            block_zipf_exponents: None,
            with_replacement: true,
            labels: BlockLabels::defaults(),
            shuffle_labels: false,
            markup_rate: 0.1,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Invalid(format!("synth config: {m}")));
        if self.n_blocks == 0 || self.users_per_block == 0 || self.block_vocab == 0 {
            return bad("block count, users per block and block vocabulary must be positive");
        }
        if self.shared_vocab == 0 && self.block_mixing < 1.0 {
            return bad("shared vocabulary is empty but block_mixing < 1");
        }
        let (tl, th) = self.tweets_per_user;
        let (kl, kh) = self.tokens_per_tweet;
        if tl == 0 || tl > th || kl == 0 || kl > kh {
            return bad("tweet and token ranges must be positive with min <= max");
        }
        if !(0.0..=1.0).contains(&self.block_mixing) || !(0.0..=1.0).contains(&self.markup_rate) {
            return bad("rates must lie in [0, 1]");
        }
        if self.labels.is_empty() {
            return bad("label table is empty");
        }
        for l in &self.labels {
            if !(0.0..=1.0).contains(&l.negative_rate) || !(0.0..=1.0).contains(&l.offensive_rate) {
                return bad("label rates must lie in [0, 1]");
            }
        }
        let exps = self.exponents();
        if exps.len() != self.n_blocks || exps.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return bad("one non-negative Zipf exponent per block required");
        }
        if !self.with_replacement {
            let pool = if self.block_mixing >= 1.0 {
                self.block_vocab
            } else if self.block_mixing <= 0.0 {
                self.shared_vocab
            } else {
                self.block_vocab + self.shared_vocab
            };
            if kh > pool {
                return bad("tokens per tweet exceed the vocabulary available without replacement");
            }
        }
        Ok(())
    }

    fn exponents(&self) -> Vec<f64> {
        self.block_zipf_exponents
            .clone()
            .unwrap_or_else(|| vec![self.zipf_exponent; self.n_blocks])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub user_id: String,
    pub block: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub tweets: Vec<Tweet>,
    pub user_labels: Vec<UserLabels>,
    pub tweet_labels: Vec<TweetLabels>,
    pub ground_truth: Vec<GroundTruth>,
}

const LETTERS: &[u8] = b"abcdefghijklmnopqrstuvwxyz";
/// No vowels, `y` or `q`: block codes add no syllables and never contain
/// the separator.
const CONSONANTS: &[u8] = b"bcdfghjklmnprstvwz";

fn encode(mut i: usize, alphabet: &[u8]) -> String {
    let base = alphabet.len();
    let mut out = Vec::new();
    loop {
        out.push(alphabet[i % base]);
        i /= base;
        if i == 0 {
            break;
        }
    }
    out.reverse();
    String::from_utf8(out).expect("ascii")
}

/// The `rank`-th word of the shared vocabulary.
pub fn shared_word(rank: usize) -> String {
    format!("s{}x", encode(rank, LETTERS))
}

/// The `rank`-th word of block `block`'s vocabulary. Words of different
/// blocks differ only in the consonant block code before the `q`, so all
/// blocks have the same syllable profile.
pub fn block_word(block: usize, rank: usize) -> String {
    format!("k{}q{}x", encode(block, CONSONANTS), encode(rank, LETTERS))
}

struct Zipf {
    cdf: Vec<f64>,
}

impl Zipf {
    fn new(n: usize, s: f64) -> Self {
        let mut acc = 0.0;
        let cdf = (1..=n)
            .map(|r| {
                acc += (r as f64).powf(-s);
                acc
            })
            .collect();
        Zipf { cdf }
    }

    /// 0-based rank.
    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        let total = *self.cdf.last().expect("non-empty vocabulary");
        let u = rng.random::<f64>() * total;
        self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1)
    }
}

const MARKUP: [&str; 5] = ["#breaking", "@newsdesk", "https://t.co/a1b2c3", "www.example.org/story", "\u{1F600}"];

/// Generate a corpus. The seed fixes every draw.
pub fn generate_corpus(config: &SynthConfig) -> Result<SynthCorpus> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let shared = Zipf::new(config.shared_vocab.max(1), config.zipf_exponent);
    let exps = config.exponents();
    let blocks: Vec<Zipf> = exps.iter().map(|&s| Zipf::new(config.block_vocab, s)).collect();
    let start: DateTime<Utc> = Utc.with_ymd_and_hms(2020, 3, 1, 0, 0, 0).single().expect("valid date");

    let n_users = config.n_blocks * config.users_per_block;
    let width = n_users.to_string().len();
    let mut assignment: Vec<usize> = (0..n_users).map(|u| u / config.users_per_block).collect();
    if config.shuffle_labels {
        assignment.shuffle(&mut rng);
    }

    let mut corpus = SynthCorpus {
        tweets: Vec::new(),
        user_labels: Vec::new(),
        tweet_labels: Vec::new(),
        ground_truth: Vec::new(),
    };
    for u in 0..n_users {
        let block = u / config.users_per_block;
        let user_id = format!("user{u:0width$}");
        let labels = &config.labels[assignment[u] % config.labels.len()];
        corpus.user_labels.push(UserLabels {
            user_id: user_id.clone(),
            account_type: labels.account_type,
            political_leaning: labels.political_leaning,
            reliability: labels.reliability,
        });
        corpus.ground_truth.push(GroundTruth {
            user_id: user_id.clone(),
            block,
        });

        let (tl, th) = config.tweets_per_user;
        let n_tweets = ((tl as f64).ln() + rng.random::<f64>() * ((th as f64 + 1.0).ln() - (tl as f64).ln()))
            .exp()
            .floor()
            .clamp(tl as f64, th as f64) as usize;
        for t in 0..n_tweets {
            let n_tokens = rng.random_range(config.tokens_per_tweet.0..=config.tokens_per_tweet.1);
            let mut words: Vec<String> = Vec::with_capacity(n_tokens + 1);
            let mut used = HashSet::new();
            while words.len() < n_tokens {
                let from_block = config.shared_vocab == 0 || rng.random_bool(config.block_mixing);
                let word = if from_block {
                    block_word(block, blocks[block].sample(&mut rng))
                } else {
                    shared_word(shared.sample(&mut rng))
                };
                if config.with_replacement || used.insert(word.clone()) {
                    words.push(word);
                }
            }
            if rng.random_bool(config.markup_rate) {
                let tag = MARKUP[rng.random_range(0..MARKUP.len())];
                let at = rng.random_range(0..=words.len());
                words.insert(at, tag.to_string());
            }
            let tweet_id = format!("{user_id}-{t:05}");
            let negative = rng.random_bool(labels.negative_rate);
            let sentiment = if negative {
                Sentiment::Negative
            } else if rng.random_bool(0.5) {
                Sentiment::Positive
            } else {
                Sentiment::Neutral
            };
            corpus.tweet_labels.push(TweetLabels {
                tweet_id: tweet_id.clone(),
                sentiment,
                offensive: rng.random_bool(labels.offensive_rate),
            });
            corpus.tweets.push(Tweet {
                tweet_id,
                user_id: user_id.clone(),
                timestamp: start + Duration::minutes((u * 10_000 + t) as i64),
                text: format!("{}.", words.join(" ")),
                lang: CORPUS_LANGUAGE.to_string(),
            });
        }
    }
    Ok(corpus)
}

impl SynthCorpus {
    pub fn labeled(&self) -> Result<LabeledCorpus> {
        attach_labels(self.tweets.clone(), self.user_labels.clone(), self.tweet_labels.clone())
    }

    /// Block of every user, in user-id order.
    pub fn blocks(&self) -> Vec<usize> {
        self.ground_truth.iter().map(|g| g.block).collect()
    }

    /// Write `tweets.jsonl`, `user_labels.csv`, `tweet_labels.csv` and
    /// `ground_truth.csv` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

        let path = dir.join("tweets.jsonl");
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut out = BufWriter::new(file);
        for t in &self.tweets {
            let line = serde_json::to_string(t).map_err(|e| Error::Invalid(e.to_string()))?;
            writeln!(out, "{line}").map_err(|e| Error::io(&path, e))?;
        }
        out.flush().map_err(|e| Error::io(&path, e))?;

        write_csv(
            &dir.join("user_labels.csv"),
            &["user_id", "account_type", "political_leaning", "reliability"],
            self.user_labels.iter().map(|l| {
                vec![
                    l.user_id.clone(),
                    l.account_type.to_string(),
                    l.political_leaning.to_string(),
                    l.reliability.to_string(),
                ]
            }),
        )?;
        write_csv(
            &dir.join("tweet_labels.csv"),
            &["tweet_id", "sentiment", "offensive"],
            self.tweet_labels.iter().map(|l| {
                vec![
                    l.tweet_id.clone(),
                    l.sentiment.to_string(),
                    u8::from(l.offensive).to_string(),
                ]
            }),
        )?;
        write_csv(
            &dir.join("ground_truth.csv"),
            &["user_id", "block"],
            self.ground_truth.iter().map(|g| vec![g.user_id.clone(), g.block.to_string()]),
        )
    }
}

fn write_csv(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let csv_err = |e: csv::Error| Error::Invalid(format!("{}: {e}", path.display()));
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Read `ground_truth.csv` back.
pub fn load_ground_truth(path: impl AsRef<Path>) -> Result<Vec<GroundTruth>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    r.deserialize()
        .collect::<std::result::Result<Vec<GroundTruth>, _>>()
        .map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
}

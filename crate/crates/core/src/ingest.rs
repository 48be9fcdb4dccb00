//! Loading tweets and label tables, cleaning tweet text, and joining
//! everything into a [`LabeledCorpus`] keyed by user.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::LazyLock;

use chrono::{DateTime, Utc};
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Which emoji definition [`clean_tweet`] strips. Recorded in run metadata.
pub const EMOJI_DEFINITION: &str = "Unicode 10.0 Emoji property (non-ASCII codepoints) \
     + pictographic blocks U+1F000..U+1FAFF and U+1FC00..U+1FFFD \
     + emoji components (ZWJ, VS15/VS16, keycap, tag characters)";

/// Only tweets in this language survive ingest.
pub const CORPUS_LANGUAGE: &str = "en";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tweet {
    pub tweet_id: String,
    pub user_id: String,
    pub timestamp: DateTime<Utc>,
    pub text: String,
    pub lang: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AccountType {
    Individual,
    Organization,
    #[default]
    Unknown,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PoliticalLeaning {
    Left,
    Center,
    Right,
    #[default]
    Unknown,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Reliability {
    Reliable,
    Questionable,
    #[default]
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sentiment {
    Positive,
    Neutral,
    Negative,
}

macro_rules! label_enum_text {
    ($ty:ty { $($variant:ident => $text:literal),* $(,)? } $(unknown: $unk:ident)?) => {
        impl $ty {
            pub fn as_str(&self) -> &'static str {
                match self {
                    $(<$ty>::$variant => $text,)*
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $ty {
            type Err = String;

            fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
                let s = s.trim();
                $(if s.is_empty() {
                    return Ok(<$ty>::$unk);
                })?
                $(if s.eq_ignore_ascii_case($text) {
                    return Ok(<$ty>::$variant);
                })*
                Err(format!("unrecognized {} value {:?}", stringify!($ty), s))
            }
        }
    };
}

label_enum_text!(AccountType {
    Individual => "Individual",
    Organization => "Organization",
    Unknown => "Unknown",
} unknown: Unknown);

label_enum_text!(PoliticalLeaning {
    Left => "Left",
    Center => "Center",
    Right => "Right",
    Unknown => "Unknown",
} unknown: Unknown);

label_enum_text!(Reliability {
    Reliable => "Reliable",
    Questionable => "Questionable",
    Unknown => "Unknown",
} unknown: Unknown);

label_enum_text!(Sentiment {
    Positive => "Positive",
    Neutral => "Neutral",
    Negative => "Negative",
});

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserLabels {
    pub user_id: String,
    pub account_type: AccountType,
    pub political_leaning: PoliticalLeaning,
    pub reliability: Reliability,
}

impl UserLabels {
    pub fn unknown(user_id: impl Into<String>) -> Self {
        UserLabels {
            user_id: user_id.into(),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TweetLabels {
    pub tweet_id: String,
    pub sentiment: Sentiment,
    pub offensive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Jsonl,
    Csv,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(Format::Jsonl),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown corpus format {other:?}")),
        }
    }
}

impl Format {
    /// Guess the format from a file extension; anything but `.csv` is JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Jsonl,
        }
    }
}

/// A row that failed to parse. `line` is 1-based and counts the header for CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Reject {
    pub line: usize,
    pub reason: String,
}

/// Rows read from one file plus everything that was skipped.
#[derive(Debug, Clone)]
pub struct Loaded<T> {
    pub path: PathBuf,
    pub rows: Vec<T>,
    pub rejects: Vec<Reject>,
    /// Well-formed rows dropped by the language filter.
    pub filtered_language: usize,
}

impl<T> Loaded<T> {
    pub fn rows_read(&self) -> usize {
        self.rows.len() + self.rejects.len() + self.filtered_language
    }
}

#[derive(Deserialize)]
struct RawTweet {
    tweet_id: Option<String>,
    user_id: Option<String>,
    timestamp: Option<String>,
    text: Option<String>,
    lang: Option<String>,
}

impl RawTweet {
    fn validate(self) -> std::result::Result<Tweet, String> {
        fn required(field: Option<String>, name: &str) -> std::result::Result<String, String> {
            match field {
                Some(v) if !v.trim().is_empty() => Ok(v),
                _ => Err(format!("missing {name}")),
            }
        }
        let tweet_id = required(self.tweet_id, "tweet_id")?;
        let user_id = required(self.user_id, "user_id")?;
        let raw_ts = required(self.timestamp, "timestamp")?;
        let timestamp = DateTime::parse_from_rfc3339(raw_ts.trim())
            .map_err(|e| format!("bad timestamp {raw_ts:?}: {e}"))?
            .with_timezone(&Utc);
        let text = required(self.text, "text")?;
        let lang = required(self.lang, "lang")?;
        Ok(Tweet {
            tweet_id,
            user_id,
            timestamp,
            text,
            lang: lang.trim().to_ascii_lowercase(),
        })
    }
}

/// Read tweets from a JSONL or CSV file.
///
/// Malformed rows (missing fields, bad timestamps, empty text, duplicate
/// tweet ids) are reported with their line number. Rows whose language is
/// not English are dropped and counted separately. Fails if nothing usable
/// remains.
pub fn load_corpus(path: impl AsRef<Path>, format: Format) -> Result<Loaded<Tweet>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut candidates: Vec<(usize, std::result::Result<Tweet, String>)> = Vec::new();

    match format {
        Format::Jsonl => {
            for (idx, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| Error::io(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let parsed = serde_json::from_str::<RawTweet>(&line)
                    .map_err(|e| format!("invalid JSON: {e}"))
                    .and_then(RawTweet::validate);
                candidates.push((idx + 1, parsed));
            }
        }
        Format::Csv => {
            let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(file);
            let headers = reader
                .headers()
                .map_err(|e| Error::Parse {
                    path: path.to_path_buf(),
                    message: e.to_string(),
                })?
                .clone();
            for record in reader.records() {
                match record {
                    Ok(rec) => {
                        let line = rec.position().map_or(0, |p| p.line() as usize);
                        let parsed = rec
                            .deserialize::<RawTweet>(Some(&headers))
                            .map_err(|e| format!("invalid CSV row: {e}"))
                            .and_then(RawTweet::validate);
                        candidates.push((line, parsed));
                    }
                    Err(e) => {
                        let line = e.position().map_or(0, |p| p.line() as usize);
                        candidates.push((line, Err(format!("invalid CSV row: {e}"))));
                    }
                }
            }
        }
    }

    let mut seen = HashSet::new();
    let mut rows = Vec::new();
    let mut rejects = Vec::new();
    let mut filtered_language = 0;
    for (line, parsed) in candidates {
        match parsed {
            Ok(tweet) => {
                if !seen.insert(tweet.tweet_id.clone()) {
                    rejects.push(Reject {
                        line,
                        reason: format!("duplicate tweet_id {:?}", tweet.tweet_id),
                    });
                } else if tweet.lang != CORPUS_LANGUAGE {
                    filtered_language += 1;
                } else {
                    rows.push(tweet);
                }
            }
            Err(reason) => rejects.push(Reject { line, reason }),
        }
    }

    if rows.is_empty() {
        return Err(Error::NoRows {
            path: path.to_path_buf(),
            rejected: rejects.len(),
        });
    }
    Ok(Loaded {
        path: path.to_path_buf(),
        rows,
        rejects,
        filtered_language,
    })
}

fn read_csv_rows<T>(
    path: &Path,
    mut parse: impl FnMut(&csv::StringRecord, &csv::StringRecord) -> std::result::Result<T, String>,
) -> Result<Loaded<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?
        .clone();
    let mut rows = Vec::new();
    let mut rejects = Vec::new();
    for record in reader.records() {
        match record {
            Ok(rec) => {
                let line = rec.position().map_or(0, |p| p.line() as usize);
                match parse(&headers, &rec) {
                    Ok(row) => rows.push(row),
                    Err(reason) => rejects.push(Reject { line, reason }),
                }
            }
            Err(e) => rejects.push(Reject {
                line: e.position().map_or(0, |p| p.line() as usize),
                reason: e.to_string(),
            }),
        }
    }
    Ok(Loaded {
        path: path.to_path_buf(),
        rows,
        rejects,
        filtered_language: 0,
    })
}

fn field<'a>(
    headers: &csv::StringRecord,
    rec: &'a csv::StringRecord,
    name: &str,
) -> std::result::Result<&'a str, String> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .and_then(|i| rec.get(i))
        .ok_or_else(|| format!("missing column {name}"))
}

/// Read `user_labels.csv` (`user_id,account_type,political_leaning,reliability`).
/// Empty label cells mean Unknown.
pub fn load_user_labels(path: impl AsRef<Path>) -> Result<Loaded<UserLabels>> {
    read_csv_rows(path.as_ref(), |h, r| {
        let user_id = field(h, r, "user_id")?.trim().to_string();
        if user_id.is_empty() {
            return Err("missing user_id".into());
        }
        Ok(UserLabels {
            user_id,
            account_type: field(h, r, "account_type")?.parse()?,
            political_leaning: field(h, r, "political_leaning")?.parse()?,
            reliability: field(h, r, "reliability")?.parse()?,
        })
    })
}

/// Read `tweet_labels.csv` (`tweet_id,sentiment,offensive` with offensive in {0,1}).
pub fn load_tweet_labels(path: impl AsRef<Path>) -> Result<Loaded<TweetLabels>> {
    read_csv_rows(path.as_ref(), |h, r| {
        let tweet_id = field(h, r, "tweet_id")?.trim().to_string();
        if tweet_id.is_empty() {
            return Err("missing tweet_id".into());
        }
        let offensive = match field(h, r, "offensive")?.trim() {
            "0" => false,
            "1" => true,
            other => return Err(format!("offensive must be 0 or 1, got {other:?}")),
        };
        Ok(TweetLabels {
            tweet_id,
            sentiment: field(h, r, "sentiment")?.parse()?,
            offensive,
        })
    })
}

fn is_emoji_char(c: char) -> bool {
    if c.is_ascii() {
        // '#', '*' and digits carry the Emoji property as keycap bases
        return false;
    }
    matches!(
        c as u32,
        0x200D | 0xFE0E | 0xFE0F | 0x20E3 | 0xE0020..=0xE007F | 0x1F000..=0x1FAFF | 0x1FC00..=0x1FFFD
    ) || unic_emoji_char::is_emoji(c)
}

static URL_TOKEN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(?i:https?://|www\.|t\.co/)").expect("static regex"));

fn is_removable_token(token: &str) -> bool {
    token.starts_with('#') || token.starts_with('@') || URL_TOKEN.is_match(token)
}

/// Strip emojis, hashtags, mentions and URLs from tweet text.
///
/// Emoji codepoints are removed first, then whole whitespace-delimited
/// tokens starting with `#`, `@` or a URL prefix. Remaining tokens are joined
/// by single spaces.
pub fn clean_tweet(text: &str) -> String {
    let without_emoji: String = text.chars().filter(|&c| !is_emoji_char(c)).collect();
    let kept: Vec<&str> = without_emoji
        .split_whitespace()
        .filter(|tok| !is_removable_token(tok))
        .collect();
    kept.join(" ")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabeledTweet {
    pub tweet: Tweet,
    pub labels: Option<TweetLabels>,
}

#[derive(Debug, Clone, Serialize)]
pub struct UserRecord {
    pub user_id: String,
    pub labels: UserLabels,
    /// Ordered by timestamp, then tweet id.
    pub tweets: Vec<LabeledTweet>,
}

impl UserRecord {
    /// Cleaned tweets joined with newlines.
    pub fn cleaned_text(&self) -> String {
        let cleaned: Vec<String> = self
            .tweets
            .iter()
            .map(|t| clean_tweet(&t.tweet.text))
            .filter(|t| !t.is_empty())
            .collect();
        cleaned.join("\n")
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct JoinStats {
    pub users: usize,
    pub users_unlabeled: usize,
    pub tweets: usize,
    pub tweets_labeled: usize,
    pub tweets_unlabeled: usize,
    /// Tweet-label rows whose tweet_id is not in the corpus.
    pub unmatched_tweet_labels: Vec<String>,
    /// User-label rows for users with no tweets.
    pub unmatched_user_labels: Vec<String>,
    pub duplicate_tweet_labels: Vec<String>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Provenance {
    pub sources: Vec<String>,
    pub tweets_read: usize,
    pub tweets_rejected: usize,
    pub tweets_filtered_language: usize,
    pub user_label_rows: usize,
    pub tweet_label_rows: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct LabeledCorpus {
    /// Sorted by user id.
    pub users: Vec<UserRecord>,
    pub join: JoinStats,
    pub provenance: Provenance,
}

impl LabeledCorpus {
    pub fn n_tweets(&self) -> usize {
        self.users.iter().map(|u| u.tweets.len()).sum()
    }

    pub fn user(&self, user_id: &str) -> Option<&UserRecord> {
        self.users
            .binary_search_by(|u| u.user_id.as_str().cmp(user_id))
            .ok()
            .map(|i| &self.users[i])
    }

    /// Compare totals against expected counts (e.g. a published dataset
    /// breakdown). Returns a description of every mismatch.
    pub fn check_counts(&self, expected_tweets: Option<usize>, expected_users: Option<usize>) -> Vec<String> {
        let mut problems = Vec::new();
        if let Some(want) = expected_tweets {
            if want != self.n_tweets() {
                problems.push(format!("expected {want} tweets, found {}", self.n_tweets()));
            }
        }
        if let Some(want) = expected_users {
            if want != self.users.len() {
                problems.push(format!("expected {want} users, found {}", self.users.len()));
            }
        }
        problems
    }
}

/// Left-join user and tweet labels onto the tweets, grouping by user.
///
/// Users missing from `user_labels` get all-Unknown labels; tweets missing
/// from `tweet_labels` carry no labels. Label rows that match nothing are
/// listed in the join statistics.
pub fn attach_labels(
    tweets: Vec<Tweet>,
    user_labels: Vec<UserLabels>,
    tweet_labels: Vec<TweetLabels>,
) -> Result<LabeledCorpus> {
    let mut by_user_label: HashMap<String, UserLabels> = HashMap::with_capacity(user_labels.len());
    for row in user_labels {
        if by_user_label.contains_key(&row.user_id) {
            return Err(Error::DuplicateUser(row.user_id));
        }
        by_user_label.insert(row.user_id.clone(), row);
    }

    let mut join = JoinStats::default();
    let mut by_tweet_label: HashMap<String, TweetLabels> = HashMap::with_capacity(tweet_labels.len());
    for row in tweet_labels {
        if by_tweet_label.contains_key(&row.tweet_id) {
            join.duplicate_tweet_labels.push(row.tweet_id.clone());
            continue;
        }
        by_tweet_label.insert(row.tweet_id.clone(), row);
    }

    let mut grouped: BTreeMap<String, Vec<LabeledTweet>> = BTreeMap::new();
    for tweet in tweets {
        let labels = by_tweet_label.remove(&tweet.tweet_id);
        if labels.is_some() {
            join.tweets_labeled += 1;
        } else {
            join.tweets_unlabeled += 1;
        }
        join.tweets += 1;
        grouped
            .entry(tweet.user_id.clone())
            .or_default()
            .push(LabeledTweet { tweet, labels });
    }
    join.unmatched_tweet_labels = by_tweet_label.into_keys().collect();
    join.unmatched_tweet_labels.sort();

    let mut users = Vec::with_capacity(grouped.len());
    for (user_id, mut tweets) in grouped {
        tweets.sort_by(|a, b| {
            (a.tweet.timestamp, &a.tweet.tweet_id).cmp(&(b.tweet.timestamp, &b.tweet.tweet_id))
        });
        let labels = match by_user_label.remove(&user_id) {
            Some(l) => l,
            None => {
                join.users_unlabeled += 1;
                UserLabels::unknown(&user_id)
            }
        };
        users.push(UserRecord {
            user_id,
            labels,
            tweets,
        });
    }
    join.users = users.len();
    join.unmatched_user_labels = by_user_label.into_keys().collect();
    join.unmatched_user_labels.sort();

    Ok(LabeledCorpus {
        users,
        join,
        provenance: Provenance::default(),
    })
}

/// Paths of the three input tables.
#[derive(Debug, Clone)]
pub struct CorpusPaths {
    pub tweets: PathBuf,
    pub user_labels: Option<PathBuf>,
    pub tweet_labels: Option<PathBuf>,
}

/// Load all inputs and join them, filling in provenance.
pub fn load_labeled_corpus(paths: &CorpusPaths) -> Result<(LabeledCorpus, Vec<Reject>)> {
    let tweets = load_corpus(&paths.tweets, Format::from_path(&paths.tweets))?;
    let mut provenance = Provenance {
        sources: vec![paths.tweets.display().to_string()],
        tweets_read: tweets.rows_read(),
        tweets_rejected: tweets.rejects.len(),
        tweets_filtered_language: tweets.filtered_language,
        ..Default::default()
    };
    let mut rejects = tweets.rejects;

    let user_labels = match &paths.user_labels {
        Some(p) => {
            let loaded = load_user_labels(p)?;
            provenance.sources.push(p.display().to_string());
            provenance.user_label_rows = loaded.rows.len();
            rejects.extend(loaded.rejects);
            loaded.rows
        }
        None => Vec::new(),
    };
    let tweet_labels = match &paths.tweet_labels {
        Some(p) => {
            let loaded = load_tweet_labels(p)?;
            provenance.sources.push(p.display().to_string());
            provenance.tweet_label_rows = loaded.rows.len();
            rejects.extend(loaded.rejects);
            loaded.rows
        }
        None => Vec::new(),
    };

    let mut corpus = attach_labels(tweets.rows, user_labels, tweet_labels)?;
    corpus.provenance = provenance;
    Ok((corpus, rejects))
}

//! Tweets, gold labels and recorded worker-label pools.
//!
//! Both input files are JSON Lines. A tweets file carries one [`Tweet`] per
//! line; a labels file carries one [`LabelRecord`] (one HIT) per line and can
//! only be attached to a corpus whose tweets are already loaded.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// The four candidates a tweet can mention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Candidate {
    Clinton,
    Cruz,
    Sanders,
    Trump,
}

impl Candidate {
    pub const ALL: [Candidate; 4] = [
        Candidate::Clinton,
        Candidate::Cruz,
        Candidate::Sanders,
        Candidate::Trump,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Candidate::Clinton => "Clinton",
            Candidate::Cruz => "Cruz",
            Candidate::Sanders => "Sanders",
            Candidate::Trump => "Trump",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Candidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Candidate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Candidate::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown candidate {s:?}"))
    }
}

impl Serialize for Candidate {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Candidate {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Three-point sentiment scale. The declaration order is the canonical
/// order used by confusion matrices and tie-breaking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sentiment {
    Positive,
    Neutral,
    Negative,
}

impl Sentiment {
    pub const ALL: [Sentiment; 3] = [Sentiment::Positive, Sentiment::Neutral, Sentiment::Negative];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Sentiment::Positive => "positive",
            Sentiment::Neutral => "neutral",
            Sentiment::Negative => "negative",
        }
    }
}

impl fmt::Display for Sentiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Sentiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Sentiment::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown sentiment {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tweet {
    pub id: String,
    pub text: String,
    pub mentions: BTreeSet<Candidate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<BTreeMap<Candidate, Sentiment>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_sarcastic: Option<bool>,
}

impl Tweet {
    /// Gold sentiment for every mentioned candidate, if the tweet is fully labeled.
    pub fn has_full_gold(&self) -> bool {
        match &self.gold {
            Some(gold) => !self.mentions.is_empty() && self.mentions.iter().all(|c| gold.contains_key(c)),
            None => false,
        }
    }
}

/// One HIT: a single worker labeling every mentioned candidate of one tweet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub tweet_id: String,
    pub worker_id: String,
    pub labels: BTreeMap<Candidate, Sentiment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {reason}")]
    Malformed { path: PathBuf, line: usize, reason: String },
    #[error("duplicate tweet id {id:?} (line {line})")]
    DuplicateTweet { id: String, line: usize },
    #[error("line {line}: label record references unknown tweet {tweet_id:?}")]
    UnknownTweet { tweet_id: String, line: usize },
    #[error("line {line}: label for unmentioned candidate {candidate} in tweet {tweet_id:?}")]
    UnmentionedCandidate { tweet_id: String, candidate: Candidate, line: usize },
    #[error("line {line}: record for tweet {tweet_id:?} is missing a label for {candidate}")]
    MissingLabel { tweet_id: String, candidate: Candidate, line: usize },
    #[error("line {line}: duplicate label record for tweet {tweet_id:?} by worker {worker_id:?}")]
    DuplicateRecord { tweet_id: String, worker_id: String, line: usize },
    #[error("line {line}: gold label for unmentioned candidate {candidate} in tweet {tweet_id:?}")]
    GoldNotMentioned { tweet_id: String, candidate: Candidate, line: usize },
    #[error("line {line}: invalid {field}: {reason}")]
    InvalidField { field: &'static str, reason: String, line: usize },
}

/// Case-insensitive literal patterns per candidate (names, handles, hashtags).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Lexicon {
    patterns: BTreeMap<Candidate, BTreeSet<String>>,
}

const DEFAULT_LEXICON: &str = include_str!("../data/lexicon.json");

impl Default for Lexicon {
    fn default() -> Self {
        serde_json::from_str(DEFAULT_LEXICON).expect("bundled lexicon is valid JSON")
    }
}

impl Lexicon {
    pub fn new(patterns: BTreeMap<Candidate, BTreeSet<String>>) -> Self {
        let patterns = patterns
            .into_iter()
            .map(|(c, set)| (c, set.into_iter().map(|p| p.to_lowercase()).collect()))
            .collect();
        Lexicon { patterns }
    }

    pub fn from_path(path: &Path) -> Result<Self, CorpusError> {
        let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.to_owned(),
            source,
        })?;
        let raw: BTreeMap<Candidate, BTreeSet<String>> =
            serde_json::from_str(&text).map_err(|e| CorpusError::Malformed {
                path: path.to_owned(),
                line: e.line(),
                reason: e.to_string(),
            })?;
        Ok(Lexicon::new(raw))
    }

    pub fn insert(&mut self, candidate: Candidate, pattern: &str) {
        self.patterns
            .entry(candidate)
            .or_default()
            .insert(pattern.to_lowercase());
    }

    pub fn patterns(&self, candidate: Candidate) -> impl Iterator<Item = &str> {
        self.patterns
            .get(&candidate)
            .into_iter()
            .flat_map(|set| set.iter().map(String::as_str))
    }

    pub fn all_patterns(&self) -> impl Iterator<Item = &str> {
        self.patterns.values().flat_map(|set| set.iter().map(String::as_str))
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.values().all(BTreeSet::is_empty)
    }
}

/// Candidates whose patterns occur (case-insensitively) anywhere in `text`.
pub fn detect_mentions(text: &str, lexicon: &Lexicon) -> BTreeSet<Candidate> {
    let haystack = text.to_lowercase();
    Candidate::ALL
        .into_iter()
        .filter(|&c| {
            lexicon
                .patterns(c)
                .any(|p| !p.is_empty() && haystack.contains(&p.to_lowercase()))
        })
        .collect()
}

/// On-disk shape of a tweet line. `mentions` may be omitted, in which case
/// mentions are detected from the text.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TweetLine {
    id: String,
    text: String,
    #[serde(default)]
    mentions: Option<Vec<Candidate>>,
    #[serde(default)]
    gold: Option<BTreeMap<Candidate, Sentiment>>,
    #[serde(default)]
    gold_sarcastic: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    tweets: Vec<Tweet>,
    index: HashMap<String, usize>,
    pools: BTreeMap<String, Vec<LabelRecord>>,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a corpus from in-memory tweets, enforcing the same checks as
    /// [`Corpus::load_tweets`]. Line numbers in errors are 1-based positions.
    pub fn from_tweets(tweets: Vec<Tweet>) -> Result<Self, CorpusError> {
        let mut corpus = Corpus::new();
        for (i, tweet) in tweets.into_iter().enumerate() {
            corpus.push_tweet(tweet, i + 1)?;
        }
        Ok(corpus)
    }

    pub fn load_tweets(path: &Path, lexicon: &Lexicon) -> Result<Self, CorpusError> {
        let mut corpus = Corpus::new();
        for_each_line(path, |line_no, line| {
            let raw: TweetLine = serde_json::from_str(line).map_err(|e| CorpusError::Malformed {
                path: path.to_owned(),
                line: line_no,
                reason: e.to_string(),
            })?;
            // Explicit mentions win; detection only fills in when absent.
            let mentions = match raw.mentions {
                Some(list) => list.into_iter().collect(),
                None => detect_mentions(&raw.text, lexicon),
            };
            let tweet = Tweet {
                id: raw.id,
                text: raw.text,
                mentions,
                gold: raw.gold,
                gold_sarcastic: raw.gold_sarcastic,
            };
            corpus.push_tweet(tweet, line_no)
        })?;
        Ok(corpus)
    }

    /// Attaches a labels file to the already-loaded tweets.
    pub fn load_labels(&mut self, path: &Path) -> Result<usize, CorpusError> {
        let mut count = 0;
        for_each_line(path, |line_no, line| {
            let record: LabelRecord =
                serde_json::from_str(line).map_err(|e| CorpusError::Malformed {
                    path: path.to_owned(),
                    line: line_no,
                    reason: e.to_string(),
                })?;
            self.push_record(record, line_no)?;
            count += 1;
            Ok(())
        })?;
        Ok(count)
    }

    pub fn push_tweet(&mut self, tweet: Tweet, line: usize) -> Result<(), CorpusError> {
        if tweet.id.is_empty() {
            return Err(CorpusError::InvalidField {
                field: "id",
                reason: "tweet id must be nonempty".into(),
                line,
            });
        }
        if self.index.contains_key(&tweet.id) {
            return Err(CorpusError::DuplicateTweet { id: tweet.id, line });
        }
        if let Some(gold) = &tweet.gold {
            if let Some(&candidate) = gold.keys().find(|c| !tweet.mentions.contains(c)) {
                return Err(CorpusError::GoldNotMentioned {
                    tweet_id: tweet.id,
                    candidate,
                    line,
                });
            }
        }
        self.index.insert(tweet.id.clone(), self.tweets.len());
        self.tweets.push(tweet);
        Ok(())
    }

    pub fn push_record(&mut self, record: LabelRecord, line: usize) -> Result<(), CorpusError> {
        let Some(&idx) = self.index.get(&record.tweet_id) else {
            return Err(CorpusError::UnknownTweet {
                tweet_id: record.tweet_id,
                line,
            });
        };
        let tweet = &self.tweets[idx];
        if let Some(&candidate) = record.labels.keys().find(|c| !tweet.mentions.contains(c)) {
            return Err(CorpusError::UnmentionedCandidate {
                tweet_id: record.tweet_id,
                candidate,
                line,
            });
        }
        if let Some(&candidate) = tweet.mentions.iter().find(|c| !record.labels.contains_key(c)) {
            return Err(CorpusError::MissingLabel {
                tweet_id: record.tweet_id,
                candidate,
                line,
            });
        }
        if let Some(d) = record.duration_s {
            if !(d.is_finite() && d >= 0.0) {
                return Err(CorpusError::InvalidField {
                    field: "duration_s",
                    reason: format!("{d} is not a nonnegative number"),
                    line,
                });
            }
        }
        let pool = self.pools.entry(record.tweet_id.clone()).or_default();
        if pool.iter().any(|r| r.worker_id == record.worker_id) {
            return Err(CorpusError::DuplicateRecord {
                tweet_id: record.tweet_id,
                worker_id: record.worker_id,
                line,
            });
        }
        pool.push(record);
        Ok(())
    }

    pub fn tweets(&self) -> &[Tweet] {
        &self.tweets
    }

    pub fn len(&self) -> usize {
        self.tweets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tweets.is_empty()
    }

    pub fn tweet(&self, id: &str) -> Option<&Tweet> {
        self.index.get(id).map(|&i| &self.tweets[i])
    }

    pub fn pool(&self, tweet_id: &str) -> &[LabelRecord] {
        self.pools.get(tweet_id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn pools(&self) -> &BTreeMap<String, Vec<LabelRecord>> {
        &self.pools
    }

    pub fn records(&self) -> impl Iterator<Item = &LabelRecord> {
        self.pools.values().flatten()
    }

    pub fn write_tweets(&self, path: &Path) -> Result<(), CorpusError> {
        write_lines(path, self.tweets.iter())
    }

    /// Writes label records grouped per tweet, in corpus tweet order.
    pub fn write_labels(&self, path: &Path) -> Result<(), CorpusError> {
        write_lines(
            path,
            self.tweets.iter().flat_map(|t| self.pool(&t.id).iter()),
        )
    }
}

fn for_each_line(
    path: &Path,
    mut f: impl FnMut(usize, &str) -> Result<(), CorpusError>,
) -> Result<(), CorpusError> {
    let io_err = |source| CorpusError::Io {
        path: path.to_owned(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        f(i + 1, &line)?;
    }
    Ok(())
}

fn write_lines<'a, T: Serialize + 'a>(
    path: &Path,
    items: impl Iterator<Item = &'a T>,
) -> Result<(), CorpusError> {
    let io_err = |source| CorpusError::Io {
        path: path.to_owned(),
        source,
    };
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    for item in items {
        serde_json::to_writer(&mut out, item).map_err(|e| io_err(e.into()))?;
        out.write_all(b"\n").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TweetFinding {
    pub tweet_id: String,
    pub pool_size: usize,
    pub mentions: usize,
    pub has_gold: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub tweets: Vec<TweetFinding>,
    /// Tweets missing gold for at least one mentioned candidate.
    pub missing_gold: Vec<String>,
    pub without_mentions: Vec<String>,
    /// Histogram of mention counts: index = number of candidates mentioned.
    pub mention_histogram: [usize; 5],
    pub min_pool: usize,
    pub max_pool: usize,
    pub required_pool: usize,
    pub experiment_ready: bool,
}

/// Summarizes pool sizes, gold coverage and mentions. `required_pool` is the
/// largest number of labels any policy under consideration may request for
/// one tweet.
pub fn validate_corpus(corpus: &Corpus, required_pool: usize) -> ValidationReport {
    let mut findings = Vec::with_capacity(corpus.len());
    let mut missing_gold = Vec::new();
    let mut without_mentions = Vec::new();
    let mut mention_histogram = [0usize; 5];
    for tweet in corpus.tweets() {
        let pool_size = corpus.pool(&tweet.id).len();
        let has_gold = tweet.has_full_gold();
        if !has_gold {
            missing_gold.push(tweet.id.clone());
        }
        if tweet.mentions.is_empty() {
            without_mentions.push(tweet.id.clone());
        }
        mention_histogram[tweet.mentions.len().min(4)] += 1;
        findings.push(TweetFinding {
            tweet_id: tweet.id.clone(),
            pool_size,
            mentions: tweet.mentions.len(),
            has_gold,
        });
    }
    let min_pool = findings.iter().map(|f| f.pool_size).min().unwrap_or(0);
    let max_pool = findings.iter().map(|f| f.pool_size).max().unwrap_or(0);
    let experiment_ready = !corpus.is_empty()
        && missing_gold.is_empty()
        && without_mentions.is_empty()
        && min_pool >= required_pool;
    ValidationReport {
        tweets: findings,
        missing_gold,
        without_mentions,
        mention_histogram,
        min_pool,
        max_pool,
        required_pool,
        experiment_ready,
    }
}

/// True when no worker appears twice among `records`.
pub fn distinct_workers(records: &[LabelRecord]) -> bool {
    let mut seen = HashSet::with_capacity(records.len());
    records.iter().all(|r| seen.insert(r.worker_id.as_str()))
}

//! Seven-clue Bayesian sarcasm scoring.
//!
//! Each tweet is reduced to a binary [`FeatureVector`] of sarcasm clues. A
//! [`SarcasmModel`] estimates, per clue, the fraction of tweets carrying that
//! clue which experts marked sarcastic; the normalized estimates form a
//! weight vector and the score of a tweet is the dot product of weights and
//! features.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{Lexicon, Tweet};
use crate::text;

pub const FEATURE_COUNT: usize = 7;

/// Clue categories in their fixed vector order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Feature {
    Quotes,
    Punctuation,
    AllCaps,
    Emoticon,
    Laugh,
    Surprise,
    Comparison,
}

impl Feature {
    pub const ALL: [Feature; FEATURE_COUNT] = [
        Feature::Quotes,
        Feature::Punctuation,
        Feature::AllCaps,
        Feature::Emoticon,
        Feature::Laugh,
        Feature::Surprise,
        Feature::Comparison,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Feature::Quotes => "quotes",
            Feature::Punctuation => "punctuation",
            Feature::AllCaps => "all_caps",
            Feature::Emoticon => "emoticon",
            Feature::Laugh => "laugh",
            Feature::Surprise => "surprise",
            Feature::Comparison => "comparison",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureVector(pub [bool; FEATURE_COUNT]);

impl FeatureVector {
    pub fn from_features(features: &[Feature]) -> Self {
        let mut v = FeatureVector::default();
        for f in features {
            v.set(*f, true);
        }
        v
    }

    pub fn get(&self, f: Feature) -> bool {
        self.0[f.index()]
    }

    pub fn set(&mut self, f: Feature, on: bool) {
        self.0[f.index()] = on;
    }

    pub fn present(&self) -> impl Iterator<Item = Feature> + '_ {
        Feature::ALL.into_iter().filter(|f| self.get(*f))
    }

    pub fn bits(&self) -> String {
        self.0.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

impl fmt::Display for FeatureVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.bits())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SarcasmError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("tweet {0:?} has no gold sarcasm flag")]
    MissingGold(String),
    #[error("target prevalence {0} is outside (0, 1)")]
    BadPrevalence(f64),
    #[error("cannot calibrate a threshold on an empty score set")]
    NoScores,
    #[error("invalid model file: {0}")]
    InvalidModel(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

/// Matchers for the clue categories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClueConfig {
    pub emoticons: Vec<String>,
    /// Lower-case words; a trailing `*` makes the entry a prefix match.
    pub laugh_words: Vec<String>,
    pub surprise_words: Vec<String>,
    pub comparison_words: Vec<String>,
}

const DEFAULT_CLUES: &str = include_str!("../data/clues.json");

impl Default for ClueConfig {
    fn default() -> Self {
        serde_json::from_str(DEFAULT_CLUES).expect("bundled clue config is valid JSON")
    }
}

impl ClueConfig {
    pub fn from_path(path: &Path) -> Result<Self, SarcasmError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

fn word_matches(word: &str, pattern: &str) -> bool {
    match pattern.strip_suffix('*') {
        Some(prefix) => word.starts_with(prefix),
        None => word == pattern,
    }
}

/// Scans tweet text for the seven clue categories.
#[derive(Debug, Clone, Default)]
pub struct ClueExtractor {
    clues: ClueConfig,
    lexicon: Lexicon,
}

impl ClueExtractor {
    pub fn new(clues: ClueConfig, lexicon: Lexicon) -> Self {
        ClueExtractor { clues, lexicon }
    }

    pub fn extract(&self, text: &str) -> FeatureVector {
        let mut f = FeatureVector::default();
        f.set(Feature::Quotes, has_quoted_span(text));
        f.set(
            Feature::Punctuation,
            text.contains(['?', '!', '…']) || text.contains("..."),
        );
        f.set(
            Feature::Emoticon,
            self.clues.emoticons.iter().any(|e| !e.is_empty() && text.contains(e.as_str())),
        );

        for token in text::tokens(text) {
            if !f.get(Feature::AllCaps) && self.is_shouted(&token) {
                f.set(Feature::AllCaps, true);
            }
            if token.is_url() || token.is_handle() {
                continue;
            }
            let word = token.bare().to_lowercase();
            if self.clues.laugh_words.iter().any(|p| word_matches(&word, p)) {
                f.set(Feature::Laugh, true);
            }
            if self.clues.surprise_words.contains(&word) {
                f.set(Feature::Surprise, true);
            }
            if self.clues.comparison_words.contains(&word) {
                f.set(Feature::Comparison, true);
            }
        }
        f
    }

    fn is_shouted(&self, token: &text::Token<'_>) -> bool {
        if token.is_url() || token.alphabetic_len() < 3 {
            return false;
        }
        if token.word.chars().any(|c| c.is_lowercase()) {
            return false;
        }
        let lower = token.word.to_lowercase();
        !self.lexicon.all_patterns().any(|p| lower.contains(p))
    }
}

/// A matched pair of straight double quotes, or an opening curly quote
/// followed later by a closing one.
fn has_quoted_span(text: &str) -> bool {
    if text.matches('"').count() >= 2 {
        return true;
    }
    match text.find('“') {
        Some(open) => text[open..].contains('”'),
        None => false,
    }
}

/// Extracts clues with the bundled clue lists and candidate lexicon.
pub fn extract_features(text: &str) -> FeatureVector {
    ClueExtractor::default().extract(text)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrainOptions {
    /// Additive smoothing on the per-clue estimate; 0 reproduces plain counting.
    pub smoothing: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SarcasmModel {
    pub cond_prob: [f64; FEATURE_COUNT],
    pub weights: [f64; FEATURE_COUNT],
    pub corpus_fingerprint: String,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    cond_prob: Vec<f64>,
    weights: Vec<f64>,
    feature_order: Vec<String>,
    corpus_fingerprint: String,
}

impl SarcasmModel {
    pub fn train(examples: &[(FeatureVector, bool)]) -> Result<Self, SarcasmError> {
        Self::train_with(examples, TrainOptions::default())
    }

    pub fn train_with(
        examples: &[(FeatureVector, bool)],
        options: TrainOptions,
    ) -> Result<Self, SarcasmError> {
        if examples.is_empty() {
            return Err(SarcasmError::EmptyTrainingSet);
        }
        let mut with_feature = [0u64; FEATURE_COUNT];
        let mut sarcastic_with_feature = [0u64; FEATURE_COUNT];
        for (fv, sarcastic) in examples {
            for f in fv.present() {
                with_feature[f.index()] += 1;
                if *sarcastic {
                    sarcastic_with_feature[f.index()] += 1;
                }
            }
        }
        let alpha = options.smoothing.max(0.0);
        let mut cond_prob = [0.0; FEATURE_COUNT];
        for n in 0..FEATURE_COUNT {
            let denom = with_feature[n] as f64 + 2.0 * alpha;
            if denom > 0.0 {
                cond_prob[n] = (sarcastic_with_feature[n] as f64 + alpha) / denom;
            }
        }
        Ok(SarcasmModel {
            cond_prob,
            weights: normalize(&cond_prob),
            corpus_fingerprint: fingerprint(examples),
        })
    }

    /// Trains on tweets' gold flags, extracting clues with `extractor`.
    pub fn train_on_tweets(
        tweets: &[Tweet],
        extractor: &ClueExtractor,
        options: TrainOptions,
    ) -> Result<Self, SarcasmError> {
        let examples = tweets
            .iter()
            .map(|t| {
                t.gold_sarcastic
                    .map(|flag| (extractor.extract(&t.text), flag))
                    .ok_or_else(|| SarcasmError::MissingGold(t.id.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::train_with(&examples, options)
    }

    /// `wᵀf`, clamped into `[0, 1]` against rounding in the weight sum.
    pub fn score(&self, f: &FeatureVector) -> f64 {
        let dot = f.present().fold(0.0, |acc, feat| acc + self.weights[feat.index()]);
        dot.clamp(0.0, 1.0)
    }

    pub fn to_json(&self) -> Result<String, SarcasmError> {
        let file = ModelFile {
            cond_prob: self.cond_prob.to_vec(),
            weights: self.weights.to_vec(),
            feature_order: Feature::ALL.iter().map(|f| f.name().to_string()).collect(),
            corpus_fingerprint: self.corpus_fingerprint.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(s: &str) -> Result<Self, SarcasmError> {
        let file: ModelFile = serde_json::from_str(s)?;
        let expected: Vec<&str> = Feature::ALL.iter().map(|f| f.name()).collect();
        if file.feature_order != expected {
            return Err(SarcasmError::InvalidModel(format!(
                "feature_order must be {expected:?}"
            )));
        }
        let as_array = |v: Vec<f64>, field: &str| -> Result<[f64; FEATURE_COUNT], SarcasmError> {
            let arr: [f64; FEATURE_COUNT] = v.try_into().map_err(|v: Vec<f64>| {
                SarcasmError::InvalidModel(format!("{field} has {} entries, expected 7", v.len()))
            })?;
            if arr.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return Err(SarcasmError::InvalidModel(format!("{field} outside [0, 1]")));
            }
            Ok(arr)
        };
        Ok(SarcasmModel {
            cond_prob: as_array(file.cond_prob, "cond_prob")?,
            weights: as_array(file.weights, "weights")?,
            corpus_fingerprint: file.corpus_fingerprint,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), SarcasmError> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, SarcasmError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

fn normalize(cond_prob: &[f64; FEATURE_COUNT]) -> [f64; FEATURE_COUNT] {
    let total: f64 = cond_prob.iter().sum();
    if total > 0.0 {
        cond_prob.map(|p| p / total)
    } else {
        [0.0; FEATURE_COUNT]
    }
}

/// Order-independent digest of the training examples.
fn fingerprint(examples: &[(FeatureVector, bool)]) -> String {
    let mut keys: Vec<(FeatureVector, bool)> = examples.to_vec();
    keys.sort();
    let mut hasher = Sha256::new();
    for (fv, flag) in &keys {
        hasher.update(fv.bits().as_bytes());
        hasher.update(if *flag { b":1\n" } else { b":0\n" });
    }
    hasher
        .finalize()
        .iter()
        .take(16)
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Gold sarcasm prevalence observed by the expert annotators (73 of 800).
pub const REFERENCE_PREVALENCE: f64 = 73.0 / 800.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub threshold: f64,
    pub flagged: usize,
    /// True when no observed score could meet the prevalence target.
    pub degenerate: bool,
}

/// Smallest score `τ` such that the fraction of scores `>= τ` does not
/// exceed `target_prevalence`.
///
/// When every score is equal, `τ` is that score and the result is marked
/// degenerate. When the top score alone is too frequent, `τ` is placed just
/// above it so that nothing is flagged (also degenerate).
pub fn calibrate_threshold(scores: &[f64], target_prevalence: f64) -> Result<Calibration, SarcasmError> {
    if !(target_prevalence > 0.0 && target_prevalence < 1.0) {
        return Err(SarcasmError::BadPrevalence(target_prevalence));
    }
    if scores.is_empty() {
        return Err(SarcasmError::NoScores);
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    // sorted[i..] are the scores >= sorted[i] when i starts a run of equal values.
    let mut i = 0;
    while i < sorted.len() {
        let at_least = sorted.len() - i;
        if at_least as f64 / n <= target_prevalence {
            return Ok(Calibration {
                threshold: sorted[i],
                flagged: at_least,
                degenerate: false,
            });
        }
        let v = sorted[i];
        while i < sorted.len() && sorted[i] == v {
            i += 1;
        }
    }
    let (first, last) = (sorted[0], sorted[sorted.len() - 1]);
    if first == last {
        log::warn!("all {} sarcasm scores equal {first}; threshold degenerates to it", sorted.len());
        Ok(Calibration {
            threshold: first,
            flagged: sorted.len(),
            degenerate: true,
        })
    } else {
        log::warn!("top sarcasm score {last} exceeds the prevalence target on its own; nothing flagged");
        Ok(Calibration {
            threshold: last.next_up(),
            flagged: 0,
            degenerate: true,
        })
    }
}

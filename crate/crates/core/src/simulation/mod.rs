//! Label sources for experiments: synthetic workers and replay of recorded
//! label pools. Also the experiment driver and the demo corpus generator.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allocation::{majority_vote, AllocationError, LabelSession, LabelSource};
use crate::analytics::Scheme;
use crate::corpus::{Corpus, LabelRecord, Sentiment, Tweet};
use crate::difficulty::DifficultyClass;
use crate::rng::{stream, Purpose, StreamRng};

pub mod demo;
pub mod experiment;

pub use experiment::{prepare, run_experiment, ExperimentConfig, ExperimentError, Mode, Prepared};

/// Per-class probability that a synthetic worker returns the gold label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassAccuracy {
    pub very_easy: f64,
    pub easy: f64,
    pub medium: f64,
    pub hard: f64,
}

impl Default for ClassAccuracy {
    fn default() -> Self {
        ClassAccuracy {
            very_easy: 0.9,
            easy: 0.8,
            medium: 0.7,
            hard: 0.6,
        }
    }
}

impl ClassAccuracy {
    pub fn uniform(p: f64) -> Self {
        ClassAccuracy {
            very_easy: p,
            easy: p,
            medium: p,
            hard: p,
        }
    }

    pub fn get(&self, class: DifficultyClass) -> f64 {
        match class {
            DifficultyClass::VeryEasy => self.very_easy,
            DifficultyClass::Easy => self.easy,
            DifficultyClass::Medium => self.medium,
            DifficultyClass::Hard => self.hard,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for class in DifficultyClass::ALL {
            let p = self.get(class);
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("accuracy for {class} must lie in [0, 1], got {p}"));
            }
        }
        Ok(())
    }
}

/// How a wrong answer is spread over the two incorrect sentiments.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorSplit {
    /// Both wrong sentiments equally likely.
    #[default]
    Uniform,
    /// Relative weights for positive, neutral, negative; the gold entry is ignored.
    Weighted([f64; 3]),
    /// Always the same wrong sentiment, which makes every vote binary.
    SingleWrong,
}

impl ErrorSplit {
    pub fn single_wrong(gold: Sentiment) -> Sentiment {
        match gold {
            Sentiment::Positive => Sentiment::Negative,
            Sentiment::Neutral => Sentiment::Negative,
            Sentiment::Negative => Sentiment::Positive,
        }
    }

    fn wrong<R: Rng + ?Sized>(self, gold: Sentiment, rng: &mut R) -> Sentiment {
        let others: Vec<Sentiment> = Sentiment::ALL.into_iter().filter(|&s| s != gold).collect();
        match self {
            ErrorSplit::SingleWrong => Self::single_wrong(gold),
            ErrorSplit::Weighted(w) => {
                let a = w[others[0].index()].max(0.0);
                let b = w[others[1].index()].max(0.0);
                if a + b <= 0.0 {
                    others[rng.random_range(0..2)]
                } else if rng.random::<f64>() * (a + b) < a {
                    others[0]
                } else {
                    others[1]
                }
            }
            ErrorSplit::Uniform => others[rng.random_range(0..2)],
        }
    }
}

impl std::str::FromStr for ErrorSplit {
    type Err = String;

    /// `uniform`, `single-wrong`, or `weighted:POS,NEU,NEG`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "uniform" => return Ok(ErrorSplit::Uniform),
            "single-wrong" | "single_wrong" | "binary" => return Ok(ErrorSplit::SingleWrong),
            _ => {}
        }
        let Some(rest) = s.strip_prefix("weighted:") else {
            return Err(format!("unknown error split {s:?}"));
        };
        let w: Vec<f64> = rest
            .split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|e| format!("bad weight {x:?}: {e}")))
            .collect::<Result<_, _>>()?;
        match w[..] {
            [p, n, g] if w.iter().all(|x| *x >= 0.0) => Ok(ErrorSplit::Weighted([p, n, g])),
            _ => Err(format!("weighted split needs three non-negative weights, got {rest:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SyntheticWorkerModel {
    pub accuracy: ClassAccuracy,
    pub error_split: ErrorSplit,
}

/// One synthetic worker's label for a unit with the given gold sentiment.
pub fn synth_draw<R: Rng + ?Sized>(p: f64, split: ErrorSplit, gold: Sentiment, rng: &mut R) -> Sentiment {
    if rng.random_bool(p.clamp(0.0, 1.0)) {
        gold
    } else {
        split.wrong(gold, rng)
    }
}

/// Label source backed by [`SyntheticWorkerModel`]. Needs gold for every
/// mentioned candidate.
#[derive(Debug, Clone, Copy)]
pub struct SyntheticSource {
    pub model: SyntheticWorkerModel,
}

struct SyntheticSession<'a> {
    tweet: &'a Tweet,
    gold: &'a BTreeMap<crate::corpus::Candidate, Sentiment>,
    p: f64,
    split: ErrorSplit,
    next_worker: usize,
}

impl LabelSession for SyntheticSession<'_> {
    fn draw(&mut self, n: usize, rng: &mut StreamRng) -> Result<Vec<LabelRecord>, AllocationError> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let labels = self
                .tweet
                .mentions
                .iter()
                .map(|c| (*c, synth_draw(self.p, self.split, self.gold[c], rng)))
                .collect();
            out.push(LabelRecord {
                tweet_id: self.tweet.id.clone(),
                worker_id: format!("synth-{:02}", self.next_worker),
                labels,
                duration_s: None,
            });
            self.next_worker += 1;
        }
        Ok(out)
    }
}

impl LabelSource for SyntheticSource {
    fn session<'a>(
        &'a self,
        tweet: &'a Tweet,
        class: DifficultyClass,
    ) -> Result<Box<dyn LabelSession + 'a>, AllocationError> {
        let missing = |candidate| AllocationError::MissingGold {
            tweet_id: tweet.id.clone(),
            candidate,
        };
        let gold = match &tweet.gold {
            Some(g) => g,
            None => return Err(missing(*tweet.mentions.iter().next().ok_or_else(|| AllocationError::NoMentions(tweet.id.clone()))?)),
        };
        if let Some(c) = tweet.mentions.iter().find(|c| !gold.contains_key(c)) {
            return Err(missing(*c));
        }
        Ok(Box::new(SyntheticSession {
            tweet,
            gold,
            p: self.model.accuracy.get(class),
            split: self.model.error_split,
            next_worker: 0,
        }))
    }
}

/// Takes `n` entries from `remaining` uniformly without replacement.
fn take<R: Rng + ?Sized>(remaining: &mut Vec<usize>, n: usize, rng: &mut R) -> Vec<usize> {
    let picked: Vec<usize> = rand::seq::index::sample(rng, remaining.len(), n).into_vec();
    let out: Vec<usize> = picked.iter().map(|&i| remaining[i]).collect();
    let mut positions = picked;
    positions.sort_unstable_by(|a, b| b.cmp(a));
    for i in positions {
        remaining.remove(i);
    }
    out
}

/// Draws recorded labels without replacement, tracking what each tweet has
/// already consumed.
#[derive(Debug)]
pub struct ReplaySampler<'a> {
    corpus: &'a Corpus,
    remaining: HashMap<String, Vec<usize>>,
}

impl<'a> ReplaySampler<'a> {
    pub fn new(corpus: &'a Corpus) -> Self {
        ReplaySampler {
            corpus,
            remaining: HashMap::new(),
        }
    }

    pub fn available(&self, tweet_id: &str) -> usize {
        match self.remaining.get(tweet_id) {
            Some(r) => r.len(),
            None => self.corpus.pool(tweet_id).len(),
        }
    }

    pub fn draw<R: Rng + ?Sized>(
        &mut self,
        tweet_id: &str,
        n: usize,
        rng: &mut R,
    ) -> Result<Vec<LabelRecord>, AllocationError> {
        let pool = self.corpus.pool(tweet_id);
        let remaining = self
            .remaining
            .entry(tweet_id.to_string())
            .or_insert_with(|| (0..pool.len()).collect());
        if n > remaining.len() {
            return Err(AllocationError::Exhausted {
                tweet_id: tweet_id.to_string(),
                requested: n,
                available: remaining.len(),
            });
        }
        Ok(take(remaining, n, rng).into_iter().map(|i| pool[i].clone()).collect())
    }
}

/// Label source that replays a corpus' recorded pools.
#[derive(Debug, Clone, Copy)]
pub struct ReplaySource<'c> {
    pub corpus: &'c Corpus,
}

struct ReplaySession<'a> {
    tweet_id: &'a str,
    pool: &'a [LabelRecord],
    remaining: Vec<usize>,
}

impl LabelSession for ReplaySession<'_> {
    fn draw(&mut self, n: usize, rng: &mut StreamRng) -> Result<Vec<LabelRecord>, AllocationError> {
        if n > self.remaining.len() {
            return Err(AllocationError::Exhausted {
                tweet_id: self.tweet_id.to_string(),
                requested: n,
                available: self.remaining.len(),
            });
        }
        Ok(take(&mut self.remaining, n, rng)
            .into_iter()
            .map(|i| self.pool[i].clone())
            .collect())
    }
}

impl LabelSource for ReplaySource<'_> {
    fn session<'a>(
        &'a self,
        tweet: &'a Tweet,
        _class: DifficultyClass,
    ) -> Result<Box<dyn LabelSession + 'a>, AllocationError> {
        let pool = self.corpus.pool(&tweet.id);
        Ok(Box::new(ReplaySession {
            tweet_id: &tweet.id,
            pool,
            remaining: (0..pool.len()).collect(),
        }))
    }
}

/// Result of simulating one voting scheme on independent single-unit items.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchemeSimulation {
    pub items: u64,
    pub correct: u64,
    pub tasks: u64,
}

impl SchemeSimulation {
    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.items as f64
    }

    pub fn tasks_per_item(&self) -> f64 {
        self.tasks as f64 / self.items as f64
    }
}

const BLOCK: u64 = 8192;

/// Monte Carlo estimate of a scheme's accuracy and cost with per-label
/// accuracy `p`. Items are split into fixed blocks with their own streams,
/// so the result does not depend on the thread count.
pub fn simulate_scheme(scheme: Scheme, p: f64, split: ErrorSplit, items: u64, seed: u64) -> SchemeSimulation {
    let blocks = items.div_ceil(BLOCK);
    let (correct, tasks) = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let n = BLOCK.min(items - b * BLOCK);
            let mut rng = stream(seed, 0, &format!("scheme-block-{b}"), Purpose::Synthesis);
            let mut labels = Vec::with_capacity(scheme.max_workers());
            let (mut correct, mut tasks) = (0u64, 0u64);
            for _ in 0..n {
                let gold = Sentiment::ALL[rng.random_range(0..3)];
                labels.clear();
                let (first, extra) = match scheme {
                    Scheme::Fixed(k) => (k, 0),
                    Scheme::Dynamic { initial, extra } => (initial, extra),
                };
                labels.extend((0..first).map(|_| synth_draw(p, split, gold, &mut rng)));
                if extra > 0 && labels.iter().any(|&l| l != labels[0]) {
                    labels.extend((0..extra).map(|_| synth_draw(p, split, gold, &mut rng)));
                }
                tasks += labels.len() as u64;
                if majority_vote(&labels, &mut rng).map(|v| v.label) == Some(gold) {
                    correct += 1;
                }
            }
            (correct, tasks)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    SchemeSimulation { items, correct, tasks }
}

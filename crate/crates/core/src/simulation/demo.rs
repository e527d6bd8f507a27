//! Synthetic demo corpus: template tweets with gold labels and recorded
//! label pools, shaped like a small election sentiment study.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, LogNormal};

use crate::corpus::{Candidate, Corpus, CorpusError, LabelRecord, Sentiment, Tweet};
use crate::difficulty::DifficultyClass;
use crate::pipeline::{DifficultyPipeline, PipelineError};
use crate::rng::{stream, Purpose, StreamRng};
use crate::sarcasm::{ClueExtractor, TrainOptions};
use crate::text::proper_word_count;

use super::{synth_draw, ClassAccuracy, ErrorSplit};

#[derive(Debug, Clone, PartialEq)]
pub struct DemoSpec {
    pub tweets: usize,
    pub pool: usize,
    pub seed: u64,
    pub workers: usize,
    /// Intended difficulty mix, easiest first.
    pub class_mix: [f64; 4],
    pub accuracy: ClassAccuracy,
    pub error_split: ErrorSplit,
    pub mean_duration_s: f64,
}

impl Default for DemoSpec {
    fn default() -> Self {
        DemoSpec {
            tweets: 1000,
            pool: 10,
            seed: 2016,
            workers: 218,
            class_mix: [0.3, 0.3, 0.25, 0.15],
            accuracy: ClassAccuracy::default(),
            error_split: ErrorSplit::Uniform,
            mean_duration_s: 85.1,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DemoError {
    #[error("pool of {pool} needs at least as many workers, have {workers}")]
    TooFewWorkers { pool: usize, workers: usize },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

const NEUTRAL_WORDS: &[&str] = &[
    "debate", "tonight", "rally", "Iowa", "speech", "poll", "vote", "campaign", "news", "primary", "state",
    "voters", "interview", "today", "live", "watch", "coverage", "policy", "town", "hall", "Ohio", "Nevada",
    "numbers", "delegates", "crowd", "stage", "question", "answer",
];
const POSITIVE_WORDS: &[&str] = &[
    "great", "strong", "inspiring", "win", "love", "support", "proud", "leader", "honest", "brilliant", "hope",
];
const NEGATIVE_WORDS: &[&str] = &[
    "weak", "terrible", "disaster", "liar", "wrong", "fail", "awful", "scandal", "clueless", "embarrassing",
];
const SARCASTIC_CLUES: &[&str] = &["lol", "haha", "\"genius\"", "GENIUS", "yet", ";)", "SURE", "omg", "\"great\" plan"];
const SHORT_LINKS: &[&str] = &["https://t.co/x7Qa", "https://t.co/b2Lm", "http://bit.ly/3vKc", "https://t.co/9dPz"];

fn reference(c: Candidate, rng: &mut StreamRng) -> &'static str {
    let forms: [&str; 4] = match c {
        Candidate::Clinton => ["Clinton", "Hillary Clinton", "@HillaryClinton", "#ImWithHer"],
        Candidate::Cruz => ["Cruz", "Ted Cruz", "@tedcruz", "#CruzCrew"],
        Candidate::Sanders => ["Sanders", "Bernie Sanders", "@BernieSanders", "#FeelTheBern"],
        Candidate::Trump => ["Trump", "Donald Trump", "@realDonaldTrump", "#Trump2016"],
    };
    forms[rng.random_range(0..4)]
}

/// Picks `k` of the four difficulty points without replacement. Sarcasm is
/// the rarest point.
fn choose_points(k: usize, rng: &mut StreamRng) -> [bool; 4] {
    let mut weights = [1.0, 1.5, 1.2, 0.2];
    let mut on = [false; 4];
    for _ in 0..k.min(4) {
        let total: f64 = weights.iter().sum();
        let mut r = rng.random::<f64>() * total;
        let mut pick = 3;
        for (i, w) in weights.iter().enumerate() {
            if r < *w {
                pick = i;
                break;
            }
            r -= w;
        }
        on[pick] = true;
        weights[pick] = 0.0;
    }
    on
}

fn mentions_for(multi: bool, clinton_trump: bool, rng: &mut StreamRng) -> BTreeSet<Candidate> {
    use Candidate::*;
    let ct = [Trump, Trump, Trump, Clinton, Clinton];
    let other = [Cruz, Sanders];
    let mut set = BTreeSet::new();
    match (multi, clinton_trump) {
        (false, false) => {
            set.insert(*other.choose(rng).unwrap());
        }
        (false, true) => {
            set.insert(*ct.choose(rng).unwrap());
        }
        (true, false) => {
            set.extend(other);
        }
        (true, true) => {
            set.insert(*ct.choose(rng).unwrap());
            let pool = [Clinton, Cruz, Sanders, Trump];
            while set.len() < 2 {
                set.insert(*pool.choose(rng).unwrap());
            }
        }
    }
    set
}

fn gold_sentiment(sarcastic: bool, rng: &mut StreamRng) -> Sentiment {
    let r: f64 = rng.random();
    let (pos, neu) = if sarcastic { (0.1, 0.25) } else { (0.25, 0.42) };
    if r < pos {
        Sentiment::Positive
    } else if r < pos + neu {
        Sentiment::Neutral
    } else {
        Sentiment::Negative
    }
}

fn body_words(sentiment: Sentiment, n: usize, rng: &mut StreamRng) -> Vec<&'static str> {
    let tone = match sentiment {
        Sentiment::Positive => POSITIVE_WORDS,
        Sentiment::Negative => NEGATIVE_WORDS,
        Sentiment::Neutral => NEUTRAL_WORDS,
    };
    (0..n)
        .map(|_| {
            if rng.random_bool(0.4) {
                *tone.choose(rng).unwrap()
            } else {
                *NEUTRAL_WORDS.choose(rng).unwrap()
            }
        })
        .collect()
}

fn demo_tweet(i: usize, spec: &DemoSpec) -> Tweet {
    let id = format!("demo-{i:05}");
    let mut rng = stream(spec.seed, 0, &id, Purpose::Synthesis);
    let r: f64 = rng.random::<f64>() * spec.class_mix.iter().sum::<f64>();
    let mut acc = 0.0;
    let mut points = 3;
    for (k, w) in spec.class_mix.iter().enumerate() {
        acc += w;
        if r < acc {
            points = k;
            break;
        }
    }
    if points == 3 && rng.random_bool(0.1) {
        points = 4;
    }
    let [multi, clinton_trump, short_or_link, sarcastic] = choose_points(points, &mut rng);
    let mentions = mentions_for(multi, clinton_trump, &mut rng);
    let gold: BTreeMap<Candidate, Sentiment> = mentions
        .iter()
        .map(|&c| (c, gold_sentiment(sarcastic, &mut rng)))
        .collect();

    let refs: Vec<&str> = mentions.iter().map(|&c| reference(c, &mut rng)).collect();
    let mut head = refs.join(" and ");
    let mut clues: Vec<&str> = Vec::new();
    if sarcastic {
        let k = rng.random_range(2..=3);
        clues.extend(SARCASTIC_CLUES.choose_multiple(&mut rng, k));
    } else {
        if rng.random_bool(0.3) {
            head.push('!');
        }
        if rng.random_bool(0.1) {
            clues.push("would");
        }
        if rng.random_bool(0.03) {
            clues.push(":)");
        }
    }
    let link = short_or_link && rng.random_bool(0.5);
    let short = short_or_link && !link;
    let fixed = format!("{head} {}", clues.join(" "));
    let base = proper_word_count(&fixed);
    let target = if short {
        rng.random_range(3..=9).max(base + 1).min(9)
    } else {
        rng.random_range(11..=18)
    };
    let n_body = target.saturating_sub(base);
    let first = gold.values().next().copied().unwrap_or(Sentiment::Neutral);
    let mut body = body_words(first, n_body, &mut rng);
    let mut text = String::new();
    loop {
        text.clear();
        text.push_str(&head);
        for w in &body {
            text.push(' ');
            text.push_str(w);
        }
        for c in &clues {
            text.push(' ');
            text.push_str(c);
        }
        let count = proper_word_count(&text);
        if short && count >= 10 && !body.is_empty() {
            body.pop();
        } else if !short && count < 10 {
            body.push(NEUTRAL_WORDS.choose(&mut rng).unwrap());
        } else {
            break;
        }
    }
    if link {
        text.push(' ');
        text.push_str(SHORT_LINKS.choose(&mut rng).unwrap());
    }

    Tweet {
        id,
        text,
        mentions,
        gold: Some(gold),
        gold_sarcastic: Some(sarcastic),
    }
}

fn demo_pool(tweet: &Tweet, class: DifficultyClass, spec: &DemoSpec, durations: &LogNormal<f64>) -> Vec<LabelRecord> {
    let mut rng = stream(spec.seed, 1, &tweet.id, Purpose::Synthesis);
    let gold = tweet.gold.as_ref().expect("demo tweets carry gold");
    let p = spec.accuracy.get(class);
    let workers = rand::seq::index::sample(&mut rng, spec.workers, spec.pool).into_vec();
    workers
        .into_iter()
        .map(|w| {
            let labels = tweet
                .mentions
                .iter()
                .map(|c| (*c, synth_draw(p, spec.error_split, gold[c], &mut rng)))
                .collect();
            let d: f64 = durations.sample(&mut rng).clamp(1.0, 600.0);
            LabelRecord {
                tweet_id: tweet.id.clone(),
                worker_id: format!("w{:03}", w + 1),
                labels,
                duration_s: Some((d * 10.0).round() / 10.0),
            }
        })
        .collect()
}

/// Generates tweets, classifies them with a pipeline fitted on their gold
/// sarcasm flags, and fills each pool with labels whose accuracy follows the
/// resulting class.
pub fn generate(spec: &DemoSpec) -> Result<Corpus, DemoError> {
    if spec.pool > spec.workers {
        return Err(DemoError::TooFewWorkers {
            pool: spec.pool,
            workers: spec.workers,
        });
    }
    let tweets: Vec<Tweet> = (0..spec.tweets).map(|i| demo_tweet(i, spec)).collect();
    let pipeline = DifficultyPipeline::fit(&tweets, ClueExtractor::default(), TrainOptions::default())?;
    let classes = pipeline.classify_all(&tweets)?;
    let sigma: f64 = 0.9;
    let mu = spec.mean_duration_s.max(1.0).ln() - sigma * sigma / 2.0;
    let durations = LogNormal::new(mu, sigma).expect("finite lognormal parameters");

    let mut corpus = Corpus::from_tweets(tweets)?;
    let records: Vec<LabelRecord> = corpus
        .tweets()
        .iter()
        .zip(&classes)
        .flat_map(|(t, &c)| demo_pool(t, c, spec, &durations))
        .collect();
    for (line, r) in records.into_iter().enumerate() {
        corpus.push_record(r, line + 1)?;
    }
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{detect_mentions, validate_corpus, Lexicon};

    fn small() -> DemoSpec {
        DemoSpec {
            tweets: 300,
            pool: 6,
            seed: 11,
            ..DemoSpec::default()
        }
    }

    #[test]
    fn demo_is_valid_and_deterministic() {
        let spec = small();
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.tweets(), b.tweets());
        assert_eq!(a.pools(), b.pools());
        let report = validate_corpus(&a, spec.pool);
        assert!(report.experiment_ready, "{report:?}");
        assert_eq!(report.min_pool, 6);
    }

    #[test]
    fn detected_mentions_match_declared() {
        let corpus = generate(&small()).unwrap();
        let lexicon = Lexicon::default();
        for t in corpus.tweets() {
            assert_eq!(detect_mentions(&t.text, &lexicon), t.mentions, "{}", t.text);
        }
    }

    #[test]
    fn class_mix_is_spread() {
        let spec = small();
        let corpus = generate(&spec).unwrap();
        let p = DifficultyPipeline::fit(corpus.tweets(), ClueExtractor::default(), TrainOptions::default()).unwrap();
        let mut counts = [0usize; 4];
        for c in p.classify_all(corpus.tweets()).unwrap() {
            counts[c.index()] += 1;
        }
        for (k, n) in counts.iter().enumerate() {
            let share = *n as f64 / spec.tweets as f64;
            assert!((share - spec.class_mix[k]).abs() < 0.1, "{counts:?}");
        }
    }

    #[test]
    fn pool_cannot_exceed_workers() {
        let spec = DemoSpec {
            pool: 5,
            workers: 4,
            ..small()
        };
        assert!(matches!(generate(&spec), Err(DemoError::TooFewWorkers { .. })));
    }
}

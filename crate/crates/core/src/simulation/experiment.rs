//! Multi-run experiment driver.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::allocation::{run_policy, AllocationError, AllocationPolicy, LabelSource, RelabelScope, WorkItem};
use crate::corpus::{Corpus, CorpusError, Lexicon, Tweet};
use crate::difficulty::{default_tree, DecisionTree, DifficultyClass, TreeError};
use crate::evaluation::{
    duration_stats, evaluate_outcome, sentiment_distribution, EvalError, HistogramSpec, Money,
};
use crate::pipeline::{calibrate, train_sarcasm, DifficultyPipeline, PipelineError};
use crate::report::{EvalReport, PolicyResult, RunResult};
use crate::rng::RunSeed;
use crate::sarcasm::{ClueConfig, ClueExtractor, SarcasmError, SarcasmModel, TrainOptions};

use super::demo::{generate, DemoError, DemoSpec};
use super::{ClassAccuracy, ErrorSplit, ReplaySource, SyntheticSource, SyntheticWorkerModel};

pub const DEFAULT_SEED: u64 = 2016;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Labels drawn from the synthetic worker model against gold.
    #[default]
    Synthetic,
    /// Labels sampled from recorded pools.
    Replay,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Synthetic => "synthetic",
            Mode::Replay => "replay",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    /// Built-in policy names (`trad3`, `sdt`, `ddt1`, ...) or paths to policy files.
    pub policies: Vec<String>,
    pub runs: u32,
    pub seed: u64,
    pub price_per_task: Money,
    pub tweets: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub clues: Option<PathBuf>,
    pub sarcasm_model: Option<PathBuf>,
    pub sarcasm_threshold: Option<f64>,
    pub tree: Option<PathBuf>,
    /// Size of the generated corpus when no tweet file is given.
    pub demo_tweets: usize,
    pub demo_pool: usize,
    pub accuracy: ClassAccuracy,
    pub error_split: ErrorSplit,
    pub relabel: RelabelScope,
    /// Worker threads; 0 uses one per core.
    pub threads: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mode: Mode::Synthetic,
            policies: ["trad3", "trad5", "sdt", "ddt1", "ddt2"].map(String::from).to_vec(),
            runs: 5,
            seed: DEFAULT_SEED,
            price_per_task: Money::from_micros(50_000),
            tweets: None,
            labels: None,
            lexicon: None,
            clues: None,
            sarcasm_model: None,
            sarcasm_threshold: None,
            tree: None,
            demo_tweets: 1000,
            demo_pool: 10,
            accuracy: ClassAccuracy::default(),
            error_split: ErrorSplit::Uniform,
            relabel: RelabelScope::WholeTweet,
            threads: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self, ExperimentError> {
        serde_json::from_str(s).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let body = std::fs::read_to_string(path).map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&body)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config always serializes")
    }

    pub fn demo_spec(&self) -> DemoSpec {
        DemoSpec {
            tweets: self.demo_tweets,
            pool: self.demo_pool,
            seed: self.seed,
            accuracy: self.accuracy,
            error_split: self.error_split,
            ..DemoSpec::default()
        }
    }

    /// Resolves policy names and files. Built-ins take the configured
    /// relabel scope; policy files keep their own.
    pub fn resolve_policies(&self) -> Result<Vec<AllocationPolicy>, ExperimentError> {
        if self.policies.is_empty() {
            return Err(ExperimentError::Config("no policy selected".into()));
        }
        self.policies
            .iter()
            .map(|p| {
                let path = Path::new(p);
                if p.ends_with(".json") || path.is_file() {
                    Ok(AllocationPolicy::load(path)?)
                } else {
                    Ok(p.parse::<AllocationPolicy>()?.with_relabel(self.relabel))
                }
            })
            .collect()
    }

    fn validate(&self) -> Result<(), ExperimentError> {
        if self.runs == 0 {
            return Err(ExperimentError::Config("runs must be at least 1".into()));
        }
        self.accuracy.validate().map_err(ExperimentError::Config)?;
        if self.tweets.is_none() && self.labels.is_some() {
            return Err(ExperimentError::Config("labels given without tweets".into()));
        }
        if self.tweets.is_none() && self.demo_tweets == 0 {
            return Err(ExperimentError::Config("demo corpus needs at least one tweet".into()));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Sarcasm(#[from] SarcasmError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Allocation(#[from] AllocationError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Demo(#[from] DemoError),
    #[error(
        "policy {policy} can request {needed} labels for {class} tweet {tweet_id:?} but its pool holds {available}"
    )]
    PoolTooSmall {
        policy: String,
        tweet_id: String,
        class: DifficultyClass,
        needed: usize,
        available: usize,
    },
    #[error("synthetic mode needs gold for every mentioned candidate; {missing} tweets lack it (first: {first:?})")]
    MissingGold { missing: usize, first: String },
    #[error("thread pool: {0}")]
    Threads(String),
}

/// A loaded corpus with its fitted difficulty pipeline and per-tweet classes.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub corpus: Corpus,
    pub pipeline: DifficultyPipeline,
    pub classes: Vec<DifficultyClass>,
    /// Human-readable corpus origin for report headers.
    pub source: String,
}

impl Prepared {
    pub fn work_items(&self) -> Vec<WorkItem<'_>> {
        self.corpus
            .tweets()
            .iter()
            .zip(&self.classes)
            .map(|(tweet, &class)| WorkItem { tweet, class })
            .collect()
    }

    pub fn class_counts(&self) -> [usize; 4] {
        let mut counts = [0; 4];
        for c in &self.classes {
            counts[c.index()] += 1;
        }
        counts
    }
}

pub fn load_corpus(config: &ExperimentConfig) -> Result<(Corpus, Lexicon, String), ExperimentError> {
    let lexicon = match &config.lexicon {
        Some(p) => Lexicon::from_path(p)?,
        None => Lexicon::default(),
    };
    match &config.tweets {
        Some(path) => {
            let mut corpus = Corpus::load_tweets(path, &lexicon)?;
            if let Some(labels) = &config.labels {
                corpus.load_labels(labels)?;
            }
            let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            Ok((corpus, lexicon, name))
        }
        None => {
            let spec = config.demo_spec();
            let corpus = generate(&spec)?;
            let name = format!("demo corpus (pool {}, seed {})", spec.pool, spec.seed);
            Ok((corpus, lexicon, name))
        }
    }
}

/// Loads or generates the corpus and classifies every tweet.
pub fn prepare(config: &ExperimentConfig) -> Result<Prepared, ExperimentError> {
    config.validate()?;
    let (corpus, lexicon, source) = load_corpus(config)?;
    let clues = match &config.clues {
        Some(p) => ClueConfig::from_path(p)?,
        None => ClueConfig::default(),
    };
    let extractor = ClueExtractor::new(clues, lexicon);
    let model = match &config.sarcasm_model {
        Some(p) => SarcasmModel::load(p)?,
        None => train_sarcasm(corpus.tweets(), &extractor, TrainOptions::default())?,
    };
    let threshold = match config.sarcasm_threshold {
        Some(t) => t,
        None => calibrate(corpus.tweets(), &model, &extractor)?.threshold,
    };
    let tree = match &config.tree {
        Some(p) => DecisionTree::load(p)?,
        None => default_tree(threshold),
    };
    let pipeline = DifficultyPipeline::new(extractor, model, threshold, tree);
    let classes = pipeline.classify_all(corpus.tweets())?;
    log::info!("prepared {} tweets from {source}", corpus.len());
    Ok(Prepared {
        corpus,
        pipeline,
        classes,
        source,
    })
}

fn check_capacity(policy: &AllocationPolicy, prepared: &Prepared) -> Result<(), ExperimentError> {
    for (tweet, &class) in prepared.corpus.tweets().iter().zip(&prepared.classes) {
        let needed = policy.rule(class).max_tasks();
        let available = prepared.corpus.pool(&tweet.id).len();
        if needed > available {
            return Err(ExperimentError::PoolTooSmall {
                policy: policy.name.clone(),
                tweet_id: tweet.id.clone(),
                class,
                needed,
                available,
            });
        }
    }
    Ok(())
}

fn check_gold(tweets: &[Tweet]) -> Result<(), ExperimentError> {
    let lacking: Vec<&Tweet> = tweets.iter().filter(|t| !t.has_full_gold()).collect();
    match lacking.first() {
        Some(first) => Err(ExperimentError::MissingGold {
            missing: lacking.len(),
            first: first.id.clone(),
        }),
        None => Ok(()),
    }
}

/// Runs every configured policy `runs` times. Run `r` uses seed
/// `(config.seed, r)`, so adding runs never changes earlier ones, and the
/// result does not depend on `threads`.
pub fn run_experiment(config: &ExperimentConfig, prepared: &Prepared) -> Result<EvalReport, ExperimentError> {
    config.validate()?;
    let policies = config.resolve_policies()?;
    let tweets = prepared.corpus.tweets();
    let synthetic = SyntheticSource {
        model: SyntheticWorkerModel {
            accuracy: config.accuracy,
            error_split: config.error_split,
        },
    };
    let replay = ReplaySource {
        corpus: &prepared.corpus,
    };
    let source: &dyn LabelSource = match config.mode {
        Mode::Synthetic => {
            check_gold(tweets)?;
            &synthetic
        }
        Mode::Replay => {
            for p in &policies {
                check_capacity(p, prepared)?;
            }
            &replay
        }
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| ExperimentError::Threads(e.to_string()))?;
    let items = prepared.work_items();
    let by_id: HashMap<&str, &Tweet> = tweets.iter().map(|t| (t.id.as_str(), t)).collect();

    let mut results = Vec::with_capacity(policies.len());
    for policy in policies {
        let mut runs = Vec::with_capacity(config.runs as usize);
        for run in 0..config.runs {
            let seed = RunSeed::new(config.seed, run);
            let outcome = pool.install(|| run_policy(&policy, &items, source, seed))?;
            let metrics = evaluate_outcome(&outcome, &by_id, config.price_per_task)?;
            log::info!("{} run {run}: {} tasks, kappa {:.4}", policy.name, metrics.total_tasks, metrics.kappa_pooled);
            runs.push(RunResult { run, metrics, outcome });
        }
        results.push(PolicyResult { policy, runs });
    }

    let expert = sentiment_distribution(tweets.iter().filter_map(|t| t.gold.as_ref()).flatten());
    let durations: Vec<f64> = prepared.corpus.records().filter_map(|r| r.duration_s).collect();
    let durations = match config.mode {
        Mode::Replay if !durations.is_empty() => Some(duration_stats(&durations, HistogramSpec::default())),
        _ => None,
    };
    Ok(EvalReport {
        seed: config.seed,
        runs: config.runs,
        mode: config.mode,
        price_per_task: config.price_per_task,
        source: prepared.source.clone(),
        tweets: tweets.len(),
        class_counts: prepared.class_counts(),
        threshold: prepared.pipeline.threshold,
        policies: results,
        expert_distribution: expert,
        durations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(mode: Mode) -> ExperimentConfig {
        ExperimentConfig {
            mode,
            demo_tweets: 120,
            demo_pool: 7,
            runs: 2,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn config_json_round_trip_and_defaults() {
        let c = ExperimentConfig::from_json(r#"{"mode":"replay","runs":3,"price_per_task":"0.05"}"#).unwrap();
        assert_eq!(c.mode, Mode::Replay);
        assert_eq!(c.runs, 3);
        assert_eq!(c.seed, DEFAULT_SEED);
        assert_eq!(ExperimentConfig::from_json(&c.to_json()).unwrap(), c);
        assert!(ExperimentConfig::from_json(r#"{"bogus":1}"#).is_err());
    }

    #[test]
    fn trad5_on_pools_of_five_is_run_invariant() {
        let config = ExperimentConfig {
            policies: vec!["trad5".into()],
            demo_pool: 5,
            runs: 3,
            ..small(Mode::Replay)
        };
        let prepared = prepare(&config).unwrap();
        let report = run_experiment(&config, &prepared).unwrap();
        let runs = &report.policies[0].runs;
        for r in &runs[1..] {
            assert_eq!(r.outcome.tweets, runs[0].outcome.tweets);
            assert_eq!(r.metrics.kappa_pooled, runs[0].metrics.kappa_pooled);
        }
    }

    #[test]
    fn replay_refuses_small_pools() {
        let config = ExperimentConfig {
            policies: vec!["trad7".into()],
            demo_pool: 5,
            ..small(Mode::Replay)
        };
        let prepared = prepare(&config).unwrap();
        assert!(matches!(
            run_experiment(&config, &prepared),
            Err(ExperimentError::PoolTooSmall { needed: 7, available: 5, .. })
        ));
    }

    #[test]
    fn more_runs_keep_earlier_runs() {
        let config = small(Mode::Synthetic);
        let prepared = prepare(&config).unwrap();
        let two = run_experiment(&config, &prepared).unwrap();
        let three = run_experiment(&ExperimentConfig { runs: 3, ..config }, &prepared).unwrap();
        for (a, b) in two.policies.iter().zip(&three.policies) {
            assert_eq!(a.runs[..], b.runs[..2]);
        }
    }

    #[test]
    fn replay_uses_distinct_workers_per_tweet() {
        let config = ExperimentConfig {
            policies: vec!["sdt".into()],
            ..small(Mode::Replay)
        };
        let prepared = prepare(&config).unwrap();
        let source = ReplaySource {
            corpus: &prepared.corpus,
        };
        let policy = config.resolve_policies().unwrap().remove(0);
        for item in prepared.work_items() {
            let mut session = source.session(item.tweet, item.class).unwrap();
            let mut state = crate::allocation::RoundState::new(&item.tweet.id, item.class);
            while !state.is_done() {
                state.advance(&policy, item.tweet, session.as_mut(), RunSeed::new(5, 1)).unwrap();
            }
            assert!(crate::corpus::distinct_workers(&state.collected));
        }
    }

    #[test]
    fn synthetic_needs_gold() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        std::fs::write(&path, "{\"id\":\"a\",\"text\":\"Cruz\",\"mentions\":[\"Cruz\"],\"gold_sarcastic\":false}\n{\"id\":\"b\",\"text\":\"Cruz lol\",\"mentions\":[\"Cruz\"],\"gold_sarcastic\":true}\n").unwrap();
        let config = ExperimentConfig {
            tweets: Some(path),
            ..ExperimentConfig::default()
        };
        let prepared = prepare(&config).unwrap();
        assert!(matches!(
            run_experiment(&config, &prepared),
            Err(ExperimentError::MissingGold { missing: 2, .. })
        ));
    }
}

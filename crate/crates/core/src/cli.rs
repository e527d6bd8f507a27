//! Command-line interface.
//!
//! Every subcommand prints its main result to stdout and, when `--out` is
//! given, writes files into that directory and nowhere else. Failures print
//! one JSON object `{"error": kind, "message": text}` to stderr and exit 1;
//! usage errors exit 2.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::allocation::{majority_vote, RelabelScope};
use crate::analytics::{curve, uniform_grid, AnalyticsError, Scheme};
use crate::corpus::{Candidate, Sentiment};
use crate::difficulty::{default_tree, DecisionTree};
use crate::evaluation::{duration_stats, sentiment_distribution, HistogramSpec, Money};
use crate::pipeline::{calibrate, train_sarcasm, DifficultyPipeline};
use crate::report::render_durations;
use crate::rng::{RunSeed, Purpose};
use crate::sarcasm::{ClueConfig, ClueExtractor, Feature, SarcasmModel, TrainOptions};
use crate::simulation::experiment::{load_corpus, DEFAULT_SEED};
use crate::simulation::{prepare, run_experiment, ClassAccuracy, ErrorSplit, ExperimentConfig, Mode};

#[derive(Parser, Debug)]
#[command(name = "crowdalloc", version, about = "Difficulty-aware allocation of crowdsourced sentiment labels")]
pub struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train the sarcasm model from tweets with gold sarcasm flags.
    TrainSarcasm {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Additive smoothing for the per-clue estimates.
        #[arg(long, default_value_t = 0.0)]
        smoothing: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Score tweets for sarcasm.
    Score {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Assign a difficulty class to every tweet.
    Classify {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Run policies against synthetic workers.
    Simulate(ExperimentArgs),
    /// Run policies against recorded label pools.
    Replay(ExperimentArgs),
    /// Majority-vote success probability and expected cost per scheme.
    Curves {
        /// Comma-separated schemes, e.g. trad3,trad5,dyn3+2.
        #[arg(long, value_delimiter = ',', default_value = "trad1,trad3,trad5,trad7,dyn3+2")]
        schemes: Vec<Scheme>,
        /// Number of evenly spaced accuracy values in [0, 1].
        #[arg(long, default_value_t = 101)]
        grid: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Sentiment distribution and task duration tables.
    Report {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Outcome file from simulate or replay; crowd labels default to the
        /// majority over each full pool.
        #[arg(long)]
        outcomes: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

/// Flags shared by every subcommand.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Master seed [default: 2016]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Independent runs per policy [default: 5]
    #[arg(long)]
    pub runs: Option<u32>,
    /// Comma-separated policy names or policy files.
    #[arg(long, value_delimiter = ',')]
    pub policy: Vec<String>,
    /// Price of one labeling task [default: 0.05]
    #[arg(long)]
    pub price_per_task: Option<Money>,
    /// Decision tree file; defaults to the built-in tree.
    #[arg(long)]
    pub tree: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct CorpusArgs {
    /// Tweets, one JSON object per line. Without it a demo corpus is generated.
    #[arg(long)]
    pub tweets: Option<PathBuf>,
    /// Label records, one JSON object per line.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Sentiment lexicon JSON; defaults to the bundled one
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Sarcasm clue lists JSON; defaults to the bundled ones
    #[arg(long)]
    pub clues: Option<PathBuf>,
    /// Demo corpus size [default: 1000]
    #[arg(long)]
    pub demo_tweets: Option<usize>,
    /// Labels per tweet in the demo corpus [default: 10]
    #[arg(long)]
    pub demo_pool: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ModelArgs {
    /// Sarcasm model file; trained from the corpus' gold flags when absent.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Sarcasm threshold; calibrated on the corpus when absent.
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ExperimentArgs {
    /// JSON experiment config; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Per-class worker accuracy: very easy, easy, medium, hard.
    #[arg(long, value_delimiter = ',', num_args = 4)]
    pub accuracy: Vec<f64>,
    /// uniform, single-wrong or weighted:POS,NEU,NEG.
    #[arg(long)]
    pub error_split: Option<ErrorSplit>,
    /// Count second-round labels for disputed candidates only.
    #[arg(long)]
    pub disputed_only: bool,
    /// Worker threads; 0 uses one per core.
    #[arg(long)]
    pub threads: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    fn new(kind: &'static str, message: impl ToString) -> Self {
        CliError {
            kind,
            message: message.to_string(),
        }
    }

    pub fn json_line(&self) -> String {
        serde_json::json!({"error": self.kind, "message": self.message}).to_string()
    }
}

macro_rules! cli_error_from {
    ($($ty:ty => $kind:literal),* $(,)?) => {
        $(impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::new($kind, e)
            }
        })*
    };
}

cli_error_from! {
    std::io::Error => "io",
    serde_json::Error => "json",
    csv::Error => "io",
    crate::corpus::CorpusError => "corpus",
    crate::sarcasm::SarcasmError => "sarcasm",
    crate::difficulty::TreeError => "tree",
    crate::pipeline::PipelineError => "pipeline",
    crate::allocation::AllocationError => "allocation",
    crate::evaluation::EvalError => "evaluation",
    AnalyticsError => "analytics",
}

impl From<crate::simulation::ExperimentError> for CliError {
    fn from(e: crate::simulation::ExperimentError) -> Self {
        use crate::simulation::ExperimentError as E;
        let kind = match &e {
            E::Config(_) => "config",
            E::Corpus(_) => "corpus",
            E::Sarcasm(_) => "sarcasm",
            E::Tree(_) => "tree",
            E::Pipeline(_) => "pipeline",
            E::Allocation(_) => "allocation",
            E::Eval(_) => "evaluation",
            E::Demo(_) => "demo",
            E::PoolTooSmall { .. } => "pool_too_small",
            E::MissingGold { .. } => "missing_gold",
            E::Threads(_) => "threads",
        };
        CliError::new(kind, e)
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run_with_io<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    if cli.verbose {
        let _ = env_logger::Builder::new()
            .filter_level(log::LevelFilter::Info)
            .target(env_logger::Target::Stderr)
            .try_init();
    }
    match run(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "{}", e.json_line());
            1
        }
    }
}

pub fn main() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with_io(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

fn out_dir(common: &Common) -> Result<Option<&Path>, CliError> {
    match &common.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            Ok(Some(dir.as_path()))
        }
        None => Ok(None),
    }
}

fn corpus_config(corpus: &CorpusArgs, common: &Common) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    apply_corpus(&mut c, corpus, common);
    c
}

fn apply_corpus(c: &mut ExperimentConfig, corpus: &CorpusArgs, common: &Common) {
    if corpus.tweets.is_some() {
        c.tweets = corpus.tweets.clone();
    }
    if corpus.labels.is_some() {
        c.labels = corpus.labels.clone();
    }
    if corpus.lexicon.is_some() {
        c.lexicon = corpus.lexicon.clone();
    }
    if corpus.clues.is_some() {
        c.clues = corpus.clues.clone();
    }
    if let Some(n) = corpus.demo_tweets {
        c.demo_tweets = n;
    }
    if let Some(n) = corpus.demo_pool {
        c.demo_pool = n;
    }
    if let Some(s) = common.seed {
        c.seed = s;
    }
    if common.tree.is_some() {
        c.tree = common.tree.clone();
    }
}

fn extractor_for(config: &ExperimentConfig, lexicon: crate::corpus::Lexicon) -> Result<ClueExtractor, CliError> {
    let clues = match &config.clues {
        Some(p) => ClueConfig::from_path(p)?,
        None => ClueConfig::default(),
    };
    Ok(ClueExtractor::new(clues, lexicon))
}

fn csv_string(header: &[&str], rows: Vec<Vec<String>>) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::new("io", e))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

fn emit(stdout: &mut dyn Write, out: Option<&Path>, file: &str, body: &str) -> Result<(), CliError> {
    match out {
        Some(dir) => {
            fs::write(dir.join(file), body)?;
            writeln!(stdout, "wrote {}", dir.join(file).display())?;
        }
        None => stdout.write_all(body.as_bytes())?,
    }
    Ok(())
}

fn run(command: Command, stdout: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::TrainSarcasm {
            corpus,
            smoothing,
            common,
        } => {
            let config = corpus_config(&corpus, &common);
            let (c, lexicon, _) = load_corpus(&config)?;
            let extractor = extractor_for(&config, lexicon)?;
            let model = train_sarcasm(c.tweets(), &extractor, TrainOptions { smoothing })?;
            emit(stdout, out_dir(&common)?, "sarcasm_model.json", &(model.to_json()? + "\n"))
        }
        Command::Score { corpus, model, common } => {
            let pipeline = fit_pipeline(&corpus, &model, &common)?;
            let rows = pipeline
                .0
                .iter()
                .map(|t| {
                    let f = pipeline.1.extractor.extract(&t.text);
                    let clues: Vec<&str> = f.present().map(Feature::name).collect();
                    vec![t.id.clone(), format!("{:.6}", pipeline.1.model.score(&f)), clues.join(";")]
                })
                .collect();
            let body = csv_string(&["tweet_id", "sarcasm_score", "clues"], rows)?;
            emit(stdout, out_dir(&common)?, "scores.csv", &body)
        }
        Command::Classify { corpus, model, common } => {
            let (tweets, pipeline) = fit_pipeline(&corpus, &model, &common)?;
            let mut rows = Vec::with_capacity(tweets.len());
            for t in &tweets {
                let meta = pipeline.meta(t)?;
                let mentions: Vec<&str> = t.mentions.iter().map(|c| c.name()).collect();
                rows.push(vec![
                    t.id.clone(),
                    pipeline.tree.classify(&meta).name().to_string(),
                    mentions.join(";"),
                    meta.proper_word_count.to_string(),
                    meta.has_link.to_string(),
                    format!("{:.6}", meta.sarcasm_score),
                ]);
            }
            let body = csv_string(
                &["tweet_id", "class", "mentions", "proper_words", "has_link", "sarcasm_score"],
                rows,
            )?;
            emit(stdout, out_dir(&common)?, "classes.csv", &body)
        }
        Command::Simulate(args) => experiment(Mode::Synthetic, args, stdout),
        Command::Replay(args) => experiment(Mode::Replay, args, stdout),
        Command::Curves { schemes, grid, common } => {
            let rows = curve(&schemes, &uniform_grid(grid))?;
            let rows = rows
                .into_iter()
                .map(|r| {
                    vec![
                        format!("{:.4}", r.p),
                        r.scheme,
                        format!("{:.10}", r.pm),
                        format!("{:.10}", r.expected_tasks_per_item),
                    ]
                })
                .collect();
            let body = csv_string(&["p", "scheme", "P_M", "expected_tasks_per_item"], rows)?;
            emit(stdout, out_dir(&common)?, "curves.csv", &body)
        }
        Command::Report {
            corpus,
            outcomes,
            common,
        } => report(&corpus, outcomes.as_deref(), &common, stdout),
    }
}

fn fit_pipeline(
    corpus: &CorpusArgs,
    model: &ModelArgs,
    common: &Common,
) -> Result<(Vec<crate::corpus::Tweet>, DifficultyPipeline), CliError> {
    let config = corpus_config(corpus, common);
    let (c, lexicon, _) = load_corpus(&config)?;
    let extractor = extractor_for(&config, lexicon)?;
    let sarcasm = match &model.model {
        Some(p) => SarcasmModel::load(p)?,
        None => train_sarcasm(c.tweets(), &extractor, TrainOptions::default())?,
    };
    let threshold = match model.threshold {
        Some(t) => t,
        None => calibrate(c.tweets(), &sarcasm, &extractor)?.threshold,
    };
    let tree = match &common.tree {
        Some(p) => DecisionTree::load(p)?,
        None => default_tree(threshold),
    };
    Ok((c.tweets().to_vec(), DifficultyPipeline::new(extractor, sarcasm, threshold, tree)))
}

fn experiment(mode: Mode, args: ExperimentArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut config = match &args.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    config.mode = mode;
    apply_corpus(&mut config, &args.corpus, &args.common);
    if args.model.model.is_some() {
        config.sarcasm_model = args.model.model.clone();
    }
    if args.model.threshold.is_some() {
        config.sarcasm_threshold = args.model.threshold;
    }
    if let [very_easy, easy, medium, hard] = args.accuracy[..] {
        config.accuracy = ClassAccuracy {
            very_easy,
            easy,
            medium,
            hard,
        };
    }
    if let Some(split) = args.error_split {
        config.error_split = split;
    }
    if args.disputed_only {
        config.relabel = RelabelScope::DisputedOnly;
    }
    if let Some(t) = args.threads {
        config.threads = t;
    }
    if let Some(r) = args.common.runs {
        config.runs = r;
    }
    if !args.common.policy.is_empty() {
        config.policies = args.common.policy.clone();
    }
    if let Some(price) = args.common.price_per_task {
        config.price_per_task = price;
    }
    let prepared = prepare(&config)?;
    let report = run_experiment(&config, &prepared)?;
    stdout.write_all(report.summary_text().as_bytes())?;
    if let Some(dir) = out_dir(&args.common)? {
        report.write_to(dir)?;
        let mut effective = config.clone();
        effective.threads = 0;
        fs::write(dir.join("config.json"), effective.to_json() + "\n")?;
        fs::write(dir.join("classes.csv"), classes_csv(&prepared)?)?;
        writeln!(stdout, "\nreport written to {}", dir.display())?;
    }
    Ok(())
}

fn classes_csv(prepared: &crate::simulation::Prepared) -> Result<String, CliError> {
    let rows = prepared
        .corpus
        .tweets()
        .iter()
        .zip(&prepared.classes)
        .map(|(t, c)| vec![t.id.clone(), c.name().to_string()])
        .collect();
    csv_string(&["tweet_id", "class"], rows)
}

#[derive(Deserialize)]
struct OutcomeLine {
    tweet_id: String,
    final_labels: BTreeMap<Candidate, Sentiment>,
}

fn report(corpus: &CorpusArgs, outcomes: Option<&Path>, common: &Common, stdout: &mut dyn Write) -> Result<(), CliError> {
    let config = corpus_config(corpus, common);
    let seed = common.seed.unwrap_or(DEFAULT_SEED);
    let (c, _, source) = load_corpus(&config)?;

    let (crowd_label, crowd) = match outcomes {
        Some(path) => {
            let mut labels = Vec::new();
            for (i, line) in fs::read_to_string(path)?.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let o: OutcomeLine = serde_json::from_str(line).map_err(|e| {
                    CliError::new("outcomes", format!("{}:{}: {e}", path.display(), i + 1))
                })?;
                if c.tweet(&o.tweet_id).is_none() {
                    return Err(CliError::new("outcomes", format!("unknown tweet {:?}", o.tweet_id)));
                }
                labels.extend(o.final_labels);
            }
            let table = sentiment_distribution(labels.iter().map(|(c, s)| (c, s)));
            (format!("outcomes in {}", path.display()), table)
        }
        None => {
            let run = RunSeed::new(seed, 0);
            let mut labels = Vec::new();
            for t in c.tweets() {
                let pool = c.pool(&t.id);
                let mut rng = run.stream(&t.id, Purpose::TieBreak);
                for &cand in &t.mentions {
                    let votes: Vec<Sentiment> = pool.iter().filter_map(|r| r.labels.get(&cand).copied()).collect();
                    if let Some(v) = majority_vote(&votes, &mut rng) {
                        labels.push((cand, v.label));
                    }
                }
            }
            let table = sentiment_distribution(labels.iter().map(|(c, s)| (c, s)));
            ("majority over each full pool".to_string(), table)
        }
    };
    let expert = sentiment_distribution(c.tweets().iter().filter_map(|t| t.gold.as_ref()).flatten());
    let durations: Vec<f64> = c.records().filter_map(|r| r.duration_s).collect();
    let durations = duration_stats(&durations, HistogramSpec::default());
    let pm_rows = curve(
        &["trad1", "trad3", "trad5", "trad7", "dyn3+2"].map(|s| s.parse::<Scheme>().expect("valid scheme")),
        &uniform_grid(101),
    )?;
    let pm_csv = csv_string(
        &["p", "scheme", "P_M", "expected_tasks_per_item"],
        pm_rows
            .into_iter()
            .map(|r| {
                vec![
                    format!("{:.4}", r.p),
                    r.scheme,
                    format!("{:.10}", r.pm),
                    format!("{:.10}", r.expected_tasks_per_item),
                ]
            })
            .collect(),
    )?;

    let mut text = format!("crowdalloc report\nseed {seed}\ncorpus: {source} ({} tweets)\n\n", c.len());
    text.push_str(&crowd.render(&format!("Tweets by crowd label ({crowd_label})")));
    text.push('\n');
    text.push_str(&expert.render("Tweets by gold label"));
    text.push('\n');
    if durations.is_empty() {
        text.push_str("No task durations recorded.\n");
    } else {
        text.push_str(&render_durations(&durations));
    }
    stdout.write_all(text.as_bytes())?;
    if let Some(dir) = out_dir(common)? {
        fs::write(dir.join("tables.txt"), &text)?;
        fs::write(dir.join("crowd_distribution.csv"), crowd.to_csv())?;
        fs::write(dir.join("expert_distribution.csv"), expert.to_csv())?;
        fs::write(dir.join("durations.csv"), durations.to_csv())?;
        fs::write(dir.join("pm_curves.csv"), pm_csv)?;
        writeln!(stdout, "\nreport written to {}", dir.display())?;
    }
    Ok(())
}

//! Difficulty-aware allocation of crowdsourced sentiment labels.
//!
//! Tweets about election candidates are scored for sarcasm, sorted into
//! difficulty classes by a decision tree and labeled under a per-class
//! worker budget. The crate also carries the closed-form majority-vote
//! analytics, synthetic and replay label sources, and the agreement and
//! cost metrics used to compare allocation policies.

pub mod allocation;
pub mod analytics;
pub mod cli;
pub mod corpus;
pub mod difficulty;
pub mod evaluation;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod sarcasm;
pub mod simulation;
pub mod text;

pub use allocation::{policy_table, run_policy, AllocationOutcome, AllocationPolicy, PolicyKind};
pub use analytics::{expected_tasks, pm, Scheme};
pub use corpus::{Candidate, Corpus, LabelRecord, Sentiment, Tweet};
pub use difficulty::{default_tree, DecisionTree, DifficultyClass};
pub use evaluation::{budget, cohens_kappa, Money};
pub use pipeline::DifficultyPipeline;
pub use report::EvalReport;
pub use sarcasm::{ClueExtractor, SarcasmModel};
pub use simulation::{prepare, run_experiment, ExperimentConfig, Mode};

//! Allocation policies and two-round label collection.
//!
//! A policy gives every difficulty class an initial worker count, an
//! optional second-round count and the condition that triggers it. Each tweet
//! moves through [`RoundState`] (first round, optional second round, done)
//! and its final labels are per-candidate majority votes.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Candidate, LabelRecord, Sentiment, Tweet};
use crate::difficulty::DifficultyClass;
use crate::rng::{Purpose, RunSeed, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    Never,
    NotUnanimous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "RuleFile")]
pub struct ClassRule {
    pub initial: usize,
    pub second_round: usize,
    pub trigger: Trigger,
}

/// On input, `second_round` defaults to 0 and `trigger` defaults to
/// `not_unanimous` whenever a second round is configured.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleFile {
    initial: usize,
    #[serde(default)]
    second_round: usize,
    trigger: Option<Trigger>,
}

impl From<RuleFile> for ClassRule {
    fn from(r: RuleFile) -> Self {
        let default = if r.second_round > 0 { Trigger::NotUnanimous } else { Trigger::Never };
        ClassRule {
            initial: r.initial,
            second_round: r.second_round,
            trigger: r.trigger.unwrap_or(default),
        }
    }
}

impl ClassRule {
    pub const fn fixed(n: usize) -> Self {
        ClassRule {
            initial: n,
            second_round: 0,
            trigger: Trigger::Never,
        }
    }

    pub const fn dynamic(initial: usize, extra: usize) -> Self {
        ClassRule {
            initial,
            second_round: extra,
            trigger: Trigger::NotUnanimous,
        }
    }

    pub fn max_tasks(&self) -> usize {
        match self.trigger {
            Trigger::Never => self.initial,
            Trigger::NotUnanimous => self.initial + self.second_round,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    Trad(usize),
    Sdt,
    Ddt1,
    Ddt2,
    Custom,
}

/// Which candidates second-round labels count towards.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelabelScope {
    /// Second-round workers label the whole tweet and every vote counts.
    #[default]
    WholeTweet,
    /// Second-round labels only count for candidates whose first round was split.
    DisputedOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationPolicy {
    pub name: String,
    pub kind: PolicyKind,
    rules: [ClassRule; 4],
    pub relabel: RelabelScope,
}

#[derive(Debug, thiserror::Error)]
pub enum AllocationError {
    #[error("label source exhausted for tweet {tweet_id:?}: requested {requested}, {available} left")]
    Exhausted {
        tweet_id: String,
        requested: usize,
        available: usize,
    },
    #[error("tweet {tweet_id:?} has no gold label for {candidate}")]
    MissingGold { tweet_id: String, candidate: Candidate },
    #[error("tweet {0:?} mentions no candidate")]
    NoMentions(String),
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

/// Built-in policy tables.
pub fn policy_table(kind: PolicyKind) -> AllocationPolicy {
    use DifficultyClass::*;
    let rules = |ve, e, m, h| {
        let mut r = [ClassRule::fixed(1); 4];
        r[VeryEasy.index()] = ve;
        r[Easy.index()] = e;
        r[Medium.index()] = m;
        r[Hard.index()] = h;
        r
    };
    let (name, rules) = match kind {
        PolicyKind::Trad(k) => (format!("trad{k}"), [ClassRule::fixed(k.max(1)); 4]),
        PolicyKind::Sdt => (
            "sdt".to_string(),
            rules(ClassRule::fixed(2), ClassRule::fixed(3), ClassRule::fixed(5), ClassRule::fixed(7)),
        ),
        PolicyKind::Ddt1 => (
            "ddt1".to_string(),
            rules(
                ClassRule::dynamic(2, 1),
                ClassRule::dynamic(2, 1),
                ClassRule::dynamic(3, 2),
                ClassRule::fixed(5),
            ),
        ),
        PolicyKind::Ddt2 => (
            "ddt2".to_string(),
            rules(
                ClassRule::dynamic(2, 3),
                ClassRule::dynamic(2, 3),
                ClassRule::dynamic(3, 2),
                ClassRule::dynamic(3, 2),
            ),
        ),
        PolicyKind::Custom => ("custom".to_string(), [ClassRule::fixed(1); 4]),
    };
    AllocationPolicy {
        name,
        kind,
        rules,
        relabel: RelabelScope::WholeTweet,
    }
}

#[derive(Serialize, Deserialize)]
struct PolicyFile {
    name: String,
    table: BTreeMap<DifficultyClass, ClassRule>,
    #[serde(default)]
    relabel: RelabelScope,
}

impl AllocationPolicy {
    pub fn custom(name: &str, table: BTreeMap<DifficultyClass, ClassRule>) -> Result<Self, AllocationError> {
        let mut rules = [ClassRule::fixed(1); 4];
        for class in DifficultyClass::ALL {
            let rule = table
                .get(&class)
                .ok_or_else(|| AllocationError::InvalidPolicy(format!("no rule for class {class}")))?;
            if rule.initial == 0 {
                return Err(AllocationError::InvalidPolicy(format!(
                    "class {class}: initial count must be at least 1"
                )));
            }
            rules[class.index()] = *rule;
        }
        Ok(AllocationPolicy {
            name: name.to_string(),
            kind: PolicyKind::Custom,
            rules,
            relabel: RelabelScope::WholeTweet,
        })
    }

    pub fn from_json(s: &str) -> Result<Self, AllocationError> {
        let file: PolicyFile = serde_json::from_str(s)?;
        let mut policy = Self::custom(&file.name, file.table)?;
        policy.relabel = file.relabel;
        Ok(policy)
    }

    pub fn load(path: &Path) -> Result<Self, AllocationError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        let file = PolicyFile {
            name: self.name.clone(),
            table: DifficultyClass::ALL.iter().map(|&c| (c, self.rule(c))).collect(),
            relabel: self.relabel,
        };
        serde_json::to_string_pretty(&file).expect("policy tables always serialize")
    }

    pub fn with_relabel(mut self, relabel: RelabelScope) -> Self {
        self.relabel = relabel;
        self
    }

    pub fn rule(&self, class: DifficultyClass) -> ClassRule {
        self.rules[class.index()]
    }

    /// Largest number of labels the policy can ever request for one tweet.
    pub fn max_tasks(&self) -> usize {
        self.rules.iter().map(ClassRule::max_tasks).max().unwrap_or(0)
    }
}

impl FromStr for AllocationPolicy {
    type Err = AllocationError;

    /// Accepts `tradK`, `sdt`, `ddt1` and `ddt2`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase();
        let kind = match key.as_str() {
            "sdt" => PolicyKind::Sdt,
            "ddt1" => PolicyKind::Ddt1,
            "ddt2" => PolicyKind::Ddt2,
            other => match other.strip_prefix("trad").map(str::parse::<usize>) {
                Some(Ok(k)) if k >= 1 => PolicyKind::Trad(k),
                _ => return Err(AllocationError::InvalidPolicy(format!("unknown policy {s:?}"))),
            },
        };
        Ok(policy_table(kind))
    }
}

impl fmt::Display for AllocationPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Candidates whose labels in `records` are not all identical.
pub fn disputed_candidates<'a>(
    mentions: impl IntoIterator<Item = &'a Candidate>,
    records: &[LabelRecord],
) -> Vec<Candidate> {
    mentions
        .into_iter()
        .copied()
        .filter(|c| {
            let mut labels = records.iter().filter_map(|r| r.labels.get(c));
            match labels.next() {
                Some(first) => labels.any(|l| l != first),
                None => false,
            }
        })
        .collect()
}

/// True when the class has a second round and at least one mentioned
/// candidate received differing labels.
pub fn needs_second_round(
    policy: &AllocationPolicy,
    class: DifficultyClass,
    mentions: &std::collections::BTreeSet<Candidate>,
    collected: &[LabelRecord],
) -> bool {
    let rule = policy.rule(class);
    rule.second_round > 0
        && rule.trigger == Trigger::NotUnanimous
        && !disputed_candidates(mentions, collected).is_empty()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Vote {
    pub label: Sentiment,
    pub tied: bool,
}

/// Modal label; a tie is broken uniformly at random among exactly the tied
/// labels. Returns `None` for an empty slice.
pub fn majority_vote<R: Rng + ?Sized>(labels: &[Sentiment], rng: &mut R) -> Option<Vote> {
    if labels.is_empty() {
        return None;
    }
    let mut counts = [0usize; 3];
    for l in labels {
        counts[l.index()] += 1;
    }
    let top = *counts.iter().max().expect("three counts");
    let leaders: Vec<Sentiment> = Sentiment::ALL
        .into_iter()
        .filter(|s| counts[s.index()] == top)
        .collect();
    if leaders.len() == 1 {
        Some(Vote {
            label: leaders[0],
            tied: false,
        })
    } else {
        Some(Vote {
            label: leaders[rng.random_range(0..leaders.len())],
            tied: true,
        })
    }
}

/// Supplies labels for one tweet across its rounds.
pub trait LabelSession {
    fn draw(&mut self, n: usize, rng: &mut StreamRng) -> Result<Vec<LabelRecord>, AllocationError>;
}

/// Opens an independent labeling session per tweet. Sessions are never
/// shared, so per-tweet state such as consumed pool entries stays local.
pub trait LabelSource: Sync {
    fn session<'a>(
        &'a self,
        tweet: &'a Tweet,
        class: DifficultyClass,
    ) -> Result<Box<dyn LabelSession + 'a>, AllocationError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Round {
    First,
    Second,
    Done,
}

/// Per-tweet collection ledger.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundState {
    pub tweet_id: String,
    pub class: DifficultyClass,
    pub round: Round,
    pub collected: Vec<LabelRecord>,
    first_round_len: usize,
    second_round_fired: bool,
}

impl RoundState {
    pub fn new(tweet_id: &str, class: DifficultyClass) -> Self {
        RoundState {
            tweet_id: tweet_id.to_string(),
            class,
            round: Round::First,
            collected: Vec::new(),
            first_round_len: 0,
            second_round_fired: false,
        }
    }

    pub fn tasks_used(&self) -> usize {
        self.collected.len()
    }

    pub fn is_done(&self) -> bool {
        self.round == Round::Done
    }

    pub fn first_round(&self) -> &[LabelRecord] {
        &self.collected[..self.first_round_len]
    }

    pub fn second_round_fired(&self) -> bool {
        self.second_round_fired
    }

    /// Runs the current round and moves to the next state.
    pub fn advance(
        &mut self,
        policy: &AllocationPolicy,
        tweet: &Tweet,
        session: &mut dyn LabelSession,
        seed: RunSeed,
    ) -> Result<Round, AllocationError> {
        let rule = policy.rule(self.class);
        match self.round {
            Round::First => {
                let mut rng = seed.stream(&self.tweet_id, Purpose::FirstRound);
                let drawn = session.draw(rule.initial, &mut rng)?;
                self.collected.extend(drawn);
                self.first_round_len = self.collected.len();
                self.round = if needs_second_round(policy, self.class, &tweet.mentions, &self.collected) {
                    self.second_round_fired = true;
                    Round::Second
                } else {
                    Round::Done
                };
            }
            Round::Second => {
                let mut rng = seed.stream(&self.tweet_id, Purpose::SecondRound);
                let drawn = session.draw(rule.second_round, &mut rng)?;
                self.collected.extend(drawn);
                self.round = Round::Done;
            }
            Round::Done => {}
        }
        Ok(self.round)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TweetOutcome {
    pub tweet_id: String,
    pub class: DifficultyClass,
    pub tasks_used: usize,
    pub final_labels: BTreeMap<Candidate, Sentiment>,
    /// Whether any candidate's final label came from a tie-break.
    pub tie: bool,
    #[serde(skip)]
    pub tied_candidates: usize,
    #[serde(skip)]
    pub second_round: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationOutcome {
    pub policy: String,
    pub tweets: Vec<TweetOutcome>,
    pub total_tasks: usize,
    /// Number of (tweet, candidate) votes decided by a tie-break.
    pub tie_events: usize,
}

impl AllocationOutcome {
    pub fn second_rounds(&self) -> usize {
        self.tweets.iter().filter(|t| t.second_round).count()
    }

    /// One JSON object per tweet: tweet_id, class, tasks_used, final_labels, tie.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for t in &self.tweets {
            out.push_str(&serde_json::to_string(t).expect("outcomes always serialize"));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct WorkItem<'a> {
    pub tweet: &'a Tweet,
    pub class: DifficultyClass,
}

/// Collects labels for a single tweet and aggregates them.
pub fn label_tweet(
    policy: &AllocationPolicy,
    item: WorkItem<'_>,
    source: &dyn LabelSource,
    seed: RunSeed,
) -> Result<TweetOutcome, AllocationError> {
    let tweet = item.tweet;
    if tweet.mentions.is_empty() {
        return Err(AllocationError::NoMentions(tweet.id.clone()));
    }
    let mut session = source.session(tweet, item.class)?;
    let mut state = RoundState::new(&tweet.id, item.class);
    while !state.is_done() {
        state.advance(policy, tweet, session.as_mut(), seed)?;
    }

    let disputed = disputed_candidates(&tweet.mentions, state.first_round());
    // Tie-breaks ignore the run index: identical label multisets resolve
    // identically in every run of one experiment.
    let mut tie_rng = RunSeed::new(seed.master, 0).stream(&tweet.id, Purpose::TieBreak);
    let mut final_labels = BTreeMap::new();
    let mut tied_candidates = 0;
    for &candidate in &tweet.mentions {
        let records = match policy.relabel {
            RelabelScope::DisputedOnly if !disputed.contains(&candidate) => state.first_round(),
            _ => &state.collected[..],
        };
        let labels: Vec<Sentiment> = records
            .iter()
            .filter_map(|r| r.labels.get(&candidate).copied())
            .collect();
        let vote = majority_vote(&labels, &mut tie_rng).ok_or_else(|| AllocationError::Exhausted {
            tweet_id: tweet.id.clone(),
            requested: 1,
            available: 0,
        })?;
        tied_candidates += usize::from(vote.tied);
        final_labels.insert(candidate, vote.label);
    }
    Ok(TweetOutcome {
        tweet_id: tweet.id.clone(),
        class: item.class,
        tasks_used: state.tasks_used(),
        final_labels,
        tie: tied_candidates > 0,
        tied_candidates,
        second_round: state.second_round_fired(),
    })
}

/// Runs `policy` over every item. Items are processed in parallel on the
/// current rayon pool; the outcome keeps item order and does not depend on
/// the degree of parallelism.
pub fn run_policy(
    policy: &AllocationPolicy,
    items: &[WorkItem<'_>],
    source: &dyn LabelSource,
    seed: RunSeed,
) -> Result<AllocationOutcome, AllocationError> {
    let results: Vec<Result<TweetOutcome, AllocationError>> = items
        .par_iter()
        .map(|item| label_tweet(policy, *item, source, seed))
        .collect();
    let tweets = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let total_tasks = tweets.iter().map(|t| t.tasks_used).sum();
    let tie_events = tweets.iter().map(|t| t.tied_candidates).sum();
    Ok(AllocationOutcome {
        policy: policy.name.clone(),
        tweets,
        total_tasks,
        tie_events,
    })
}

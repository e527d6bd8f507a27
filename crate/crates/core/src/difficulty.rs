//! Difficulty classes and the predicate tree that assigns them.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::corpus::{Candidate, Tweet};
use crate::sarcasm::{ClueExtractor, SarcasmModel};
use crate::text;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum DifficultyClass {
    VeryEasy,
    Easy,
    Medium,
    Hard,
}

impl DifficultyClass {
    pub const ALL: [DifficultyClass; 4] = [
        DifficultyClass::VeryEasy,
        DifficultyClass::Easy,
        DifficultyClass::Medium,
        DifficultyClass::Hard,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DifficultyClass::VeryEasy => "VeryEasy",
            DifficultyClass::Easy => "Easy",
            DifficultyClass::Medium => "Medium",
            DifficultyClass::Hard => "Hard",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for DifficultyClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DifficultyClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s.chars().filter(|c| c.is_alphanumeric()).collect();
        DifficultyClass::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(&key))
            .ok_or_else(|| format!("unknown difficulty class {s:?}"))
    }
}

impl<'de> Deserialize<'de> for DifficultyClass {
    /// Accepts `VeryEasy`, `very_easy`, `very easy` and similar spellings.
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Properties of a tweet the tree branches on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TweetMeta {
    pub mentions: BTreeSet<Candidate>,
    pub proper_word_count: usize,
    pub has_link: bool,
    pub sarcasm_score: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum TreeError {
    #[error("tweet {0:?} mentions no candidate")]
    NoMentions(String),
    #[error("{path}: unknown predicate {name:?}")]
    UnknownPredicate { path: String, name: String },
    #[error("{path}: predicate node is missing its {branch:?} child")]
    MissingChild { path: String, branch: &'static str },
    #[error("{path}: node has neither \"leaf\" nor \"predicate\"")]
    NoPredicate { path: String },
    #[error("{path}: {reason}")]
    BadNode { path: String, reason: String },
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

/// Computes the tree inputs for one tweet.
pub fn derive_meta(
    tweet: &Tweet,
    model: &SarcasmModel,
    extractor: &ClueExtractor,
) -> Result<TweetMeta, TreeError> {
    if tweet.mentions.is_empty() {
        return Err(TreeError::NoMentions(tweet.id.clone()));
    }
    Ok(TweetMeta {
        mentions: tweet.mentions.clone(),
        proper_word_count: text::proper_word_count(&tweet.text),
        has_link: text::has_link(&tweet.text),
        sarcasm_score: model.score(&extractor.extract(&tweet.text)),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    MentionsMultiple,
    MentionsAnyOf(BTreeSet<Candidate>),
    /// True when the tweet has fewer than this many proper words.
    IsShort(usize),
    HasLink,
    SarcasmAtLeast(f64),
}

pub const SHORT_TWEET_WORDS: usize = 10;

impl Predicate {
    pub fn eval(&self, m: &TweetMeta) -> bool {
        match self {
            Predicate::MentionsMultiple => m.mentions.len() > 1,
            Predicate::MentionsAnyOf(set) => m.mentions.iter().any(|c| set.contains(c)),
            Predicate::IsShort(min) => m.proper_word_count < *min,
            Predicate::HasLink => m.has_link,
            Predicate::SarcasmAtLeast(tau) => m.sarcasm_score >= *tau,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Predicate::MentionsMultiple => "mentions_multiple",
            Predicate::MentionsAnyOf(_) => "mentions_any_of",
            Predicate::IsShort(_) => "is_short",
            Predicate::HasLink => "has_link",
            Predicate::SarcasmAtLeast(_) => "sarcasm_at_least",
        }
    }

    fn arg(&self) -> Option<Value> {
        match self {
            Predicate::MentionsMultiple | Predicate::HasLink => None,
            Predicate::MentionsAnyOf(set) => {
                Some(Value::Array(set.iter().map(|c| json!(c.name())).collect()))
            }
            Predicate::IsShort(n) => Some(json!(n)),
            Predicate::SarcasmAtLeast(tau) => Some(json!(tau)),
        }
    }

    fn parse(name: &str, arg: Option<&Value>, path: &str) -> Result<Self, TreeError> {
        let bad = |reason: String| TreeError::BadNode {
            path: path.to_string(),
            reason,
        };
        let arg = arg.filter(|v| !v.is_null());
        match name {
            "mentions_multiple" => Ok(Predicate::MentionsMultiple),
            "has_link" => Ok(Predicate::HasLink),
            "mentions_any_of" => {
                let items = arg
                    .and_then(Value::as_array)
                    .ok_or_else(|| bad("mentions_any_of needs an array of candidates".into()))?;
                let set = items
                    .iter()
                    .map(|v| {
                        v.as_str()
                            .ok_or_else(|| bad("candidate names must be strings".into()))?
                            .parse::<Candidate>()
                            .map_err(bad)
                    })
                    .collect::<Result<BTreeSet<_>, _>>()?;
                Ok(Predicate::MentionsAnyOf(set))
            }
            "is_short" => match arg {
                None => Ok(Predicate::IsShort(SHORT_TWEET_WORDS)),
                Some(v) => v
                    .as_u64()
                    .map(|n| Predicate::IsShort(n as usize))
                    .ok_or_else(|| bad("is_short takes a nonnegative integer".into())),
            },
            "sarcasm_at_least" => arg
                .and_then(Value::as_f64)
                .filter(|t| t.is_finite())
                .map(Predicate::SarcasmAtLeast)
                .ok_or_else(|| bad("sarcasm_at_least needs a numeric threshold".into())),
            other => Err(TreeError::UnknownPredicate {
                path: path.to_string(),
                name: other.to_string(),
            }),
        }
    }
}

/// A binary predicate tree whose leaves are difficulty classes.
#[derive(Debug, Clone, PartialEq)]
pub enum DecisionTree {
    Leaf(DifficultyClass),
    Split {
        predicate: Predicate,
        if_true: Box<DecisionTree>,
        if_false: Box<DecisionTree>,
    },
}

impl DecisionTree {
    pub fn split(predicate: Predicate, if_true: DecisionTree, if_false: DecisionTree) -> Self {
        DecisionTree::Split {
            predicate,
            if_true: Box::new(if_true),
            if_false: Box::new(if_false),
        }
    }

    pub fn classify(&self, m: &TweetMeta) -> DifficultyClass {
        let mut node = self;
        loop {
            match node {
                DecisionTree::Leaf(class) => return *class,
                DecisionTree::Split {
                    predicate,
                    if_true,
                    if_false,
                } => node = if predicate.eval(m) { if_true } else { if_false },
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            DecisionTree::Leaf(_) => 1,
            DecisionTree::Split { if_true, if_false, .. } => if_true.leaf_count() + if_false.leaf_count(),
        }
    }

    /// Path of the leaf `m` lands in, as a sequence of branch outcomes.
    pub fn leaf_path(&self, m: &TweetMeta) -> Vec<bool> {
        let mut path = Vec::new();
        let mut node = self;
        while let DecisionTree::Split {
            predicate,
            if_true,
            if_false,
        } = node
        {
            let taken = predicate.eval(m);
            path.push(taken);
            node = if taken { if_true } else { if_false };
        }
        path
    }

    /// Every leaf path, in true-before-false order.
    pub fn leaf_paths(&self) -> Vec<Vec<bool>> {
        fn walk(node: &DecisionTree, prefix: &mut Vec<bool>, out: &mut Vec<Vec<bool>>) {
            match node {
                DecisionTree::Leaf(_) => out.push(prefix.clone()),
                DecisionTree::Split { if_true, if_false, .. } => {
                    prefix.push(true);
                    walk(if_true, prefix, out);
                    prefix.pop();
                    prefix.push(false);
                    walk(if_false, prefix, out);
                    prefix.pop();
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn to_value(&self) -> Value {
        match self {
            DecisionTree::Leaf(class) => json!({ "leaf": class.name() }),
            DecisionTree::Split {
                predicate,
                if_true,
                if_false,
            } => {
                let mut obj = Map::new();
                obj.insert("predicate".into(), json!(predicate.name()));
                if let Some(arg) = predicate.arg() {
                    obj.insert("arg".into(), arg);
                }
                obj.insert("true".into(), if_true.to_value());
                obj.insert("false".into(), if_false.to_value());
                Value::Object(obj)
            }
        }
    }

    pub fn from_value(v: &Value) -> Result<Self, TreeError> {
        Self::parse_node(v, "root")
    }

    fn parse_node(v: &Value, path: &str) -> Result<Self, TreeError> {
        let obj = v.as_object().ok_or_else(|| TreeError::BadNode {
            path: path.to_string(),
            reason: "node must be a JSON object".into(),
        })?;
        if let Some(leaf) = obj.get("leaf") {
            let name = leaf.as_str().ok_or_else(|| TreeError::BadNode {
                path: path.to_string(),
                reason: "leaf must name a class".into(),
            })?;
            let class = name.parse().map_err(|reason| TreeError::BadNode {
                path: path.to_string(),
                reason,
            })?;
            return Ok(DecisionTree::Leaf(class));
        }
        let name = obj
            .get("predicate")
            .and_then(Value::as_str)
            .ok_or_else(|| TreeError::NoPredicate {
                path: path.to_string(),
            })?;
        let predicate = Predicate::parse(name, obj.get("arg"), path)?;
        let child = |branch: &'static str| -> Result<DecisionTree, TreeError> {
            let node = obj.get(branch).ok_or_else(|| TreeError::MissingChild {
                path: path.to_string(),
                branch,
            })?;
            Self::parse_node(node, &format!("{path}.{branch}"))
        };
        Ok(DecisionTree::split(predicate, child("true")?, child("false")?))
    }

    pub fn from_json(s: &str) -> Result<Self, TreeError> {
        Self::from_value(&serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("tree values always serialize")
    }

    pub fn load(path: &Path) -> Result<Self, TreeError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Difficulty points: one each for several candidates, a Clinton/Trump
/// mention, a short-or-linked tweet, and a sarcasm score at or above `tau`.
/// 0, 1, 2 and 3+ points map to VeryEasy, Easy, Medium and Hard.
///
/// Branch order follows the tree: candidates, Clinton/Trump, length and
/// link, sarcasm.
pub fn default_tree(tau: f64) -> DecisionTree {
    fn class_for(points: usize) -> DifficultyClass {
        DifficultyClass::ALL[points.min(3)]
    }
    fn sarcasm(tau: f64, points: usize) -> DecisionTree {
        DecisionTree::split(
            Predicate::SarcasmAtLeast(tau),
            DecisionTree::Leaf(class_for(points + 1)),
            DecisionTree::Leaf(class_for(points)),
        )
    }
    fn length_or_link(tau: f64, points: usize) -> DecisionTree {
        DecisionTree::split(
            Predicate::IsShort(SHORT_TWEET_WORDS),
            sarcasm(tau, points + 1),
            DecisionTree::split(Predicate::HasLink, sarcasm(tau, points + 1), sarcasm(tau, points)),
        )
    }
    fn clinton_trump(tau: f64, points: usize) -> DecisionTree {
        DecisionTree::split(
            Predicate::MentionsAnyOf(BTreeSet::from([Candidate::Clinton, Candidate::Trump])),
            length_or_link(tau, points + 1),
            length_or_link(tau, points),
        )
    }
    DecisionTree::split(
        Predicate::MentionsMultiple,
        clinton_trump(tau, 1),
        clinton_trump(tau, 0),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sarcasm::{Feature, FeatureVector};

    const TAU: f64 = 0.4;

    fn meta(mentions: &[Candidate], words: usize, link: bool, score: f64) -> TweetMeta {
        TweetMeta {
            mentions: mentions.iter().copied().collect(),
            proper_word_count: words,
            has_link: link,
            sarcasm_score: score,
        }
    }

    /// Direct point count, independent of the tree structure.
    fn points_oracle(m: &TweetMeta) -> DifficultyClass {
        let ct = m.mentions.contains(&Candidate::Clinton) || m.mentions.contains(&Candidate::Trump);
        let pts = usize::from(m.mentions.len() > 1)
            + usize::from(ct)
            + usize::from(m.proper_word_count < 10 || m.has_link)
            + usize::from(m.sarcasm_score >= TAU);
        DifficultyClass::ALL[pts.min(3)]
    }

    /// The finite meta abstraction: mention count, Clinton/Trump, short, link, sarcastic.
    fn abstract_metas() -> Vec<TweetMeta> {
        let mention_sets: [&[Candidate]; 4] = [
            &[Candidate::Cruz],
            &[Candidate::Trump],
            &[Candidate::Cruz, Candidate::Sanders],
            &[Candidate::Clinton, Candidate::Cruz],
        ];
        let mut out = Vec::new();
        for set in mention_sets {
            for short in [false, true] {
                for link in [false, true] {
                    for sarcastic in [false, true] {
                        out.push(meta(
                            set,
                            if short { 4 } else { 15 },
                            link,
                            if sarcastic { TAU + 0.1 } else { TAU - 0.1 },
                        ));
                    }
                }
            }
        }
        out
    }

    #[test]
    fn default_tree_examples() {
        let tree = default_tree(TAU);
        assert_eq!(tree.classify(&meta(&[Candidate::Cruz], 15, false, 0.0)), DifficultyClass::VeryEasy);
        assert_eq!(
            tree.classify(&meta(&[Candidate::Trump, Candidate::Cruz], 15, false, 0.9)),
            DifficultyClass::Hard
        );
        assert_eq!(tree.classify(&meta(&[Candidate::Clinton], 4, true, 0.0)), DifficultyClass::Medium);
    }

    #[test]
    fn default_tree_matches_point_oracle() {
        let tree = default_tree(TAU);
        for m in abstract_metas() {
            assert_eq!(tree.classify(&m), points_oracle(&m), "{m:?}");
        }
    }

    #[test]
    fn every_leaf_reachable() {
        let tree = default_tree(TAU);
        let reached: BTreeSet<Vec<bool>> = abstract_metas().iter().map(|m| tree.leaf_path(m)).collect();
        let all: BTreeSet<Vec<bool>> = tree.leaf_paths().into_iter().collect();
        assert_eq!(reached, all);
        assert_eq!(tree.leaf_count(), all.len());
    }

    #[test]
    fn harder_inputs_never_get_easier() {
        let tree = default_tree(TAU);
        for m in abstract_metas() {
            let base = tree.classify(&m);
            let mut variants = Vec::new();
            if m.mentions.len() == 1 {
                let mut v = m.clone();
                v.mentions.insert(if m.mentions.contains(&Candidate::Sanders) {
                    Candidate::Cruz
                } else {
                    Candidate::Sanders
                });
                variants.push(v);
            }
            for c in [Candidate::Clinton, Candidate::Trump] {
                let mut v = m.clone();
                v.mentions.insert(c);
                variants.push(v);
            }
            variants.push(TweetMeta { proper_word_count: 3, ..m.clone() });
            variants.push(TweetMeta { has_link: true, ..m.clone() });
            variants.push(TweetMeta { sarcasm_score: 1.0, ..m.clone() });
            for v in variants {
                assert!(tree.classify(&v) >= base, "{m:?} -> {v:?}");
            }
        }
    }

    #[test]
    fn tree_json_round_trip() {
        let tree = default_tree(0.3125);
        let back = DecisionTree::from_json(&tree.to_json()).unwrap();
        assert_eq!(tree, back);
    }

    #[test]
    fn constant_tree() {
        let tree = DecisionTree::from_json(r#"{"leaf": "Medium"}"#).unwrap();
        for m in abstract_metas() {
            assert_eq!(tree.classify(&m), DifficultyClass::Medium);
        }
    }

    #[test]
    fn config_errors() {
        let unknown = r#"{"predicate":"is_funny","true":{"leaf":"Hard"},"false":{"leaf":"Easy"}}"#;
        assert!(matches!(DecisionTree::from_json(unknown), Err(TreeError::UnknownPredicate { .. })));
        let missing = r#"{"predicate":"has_link","true":{"leaf":"Hard"}}"#;
        assert!(matches!(
            DecisionTree::from_json(missing),
            Err(TreeError::MissingChild { branch: "false", .. })
        ));
        let bare = r#"{"true":{"leaf":"Hard"},"false":{"leaf":"Easy"}}"#;
        assert!(matches!(DecisionTree::from_json(bare), Err(TreeError::NoPredicate { .. })));
        let bad_leaf = r#"{"leaf":"Trivial"}"#;
        assert!(matches!(DecisionTree::from_json(bad_leaf), Err(TreeError::BadNode { .. })));
        let no_tau = r#"{"predicate":"sarcasm_at_least","true":{"leaf":"Hard"},"false":{"leaf":"Easy"}}"#;
        assert!(DecisionTree::from_json(no_tau).is_err());
    }

    #[test]
    fn is_short_defaults_to_ten_words() {
        let t = r#"{"predicate":"is_short","true":{"leaf":"Hard"},"false":{"leaf":"Easy"}}"#;
        let tree = DecisionTree::from_json(t).unwrap();
        assert_eq!(tree.classify(&meta(&[Candidate::Cruz], 9, false, 0.0)), DifficultyClass::Hard);
        assert_eq!(tree.classify(&meta(&[Candidate::Cruz], 10, false, 0.0)), DifficultyClass::Easy);
    }

    #[test]
    fn derive_meta_examples() {
        let model = SarcasmModel::train(&[(FeatureVector::from_features(&[Feature::Laugh]), true)]).unwrap();
        let extractor = ClueExtractor::default();
        let tweet = |text: &str, mentions: &[Candidate]| Tweet {
            id: "t".into(),
            text: text.into(),
            mentions: mentions.iter().copied().collect(),
            gold: None,
            gold_sarcastic: None,
        };
        let m = derive_meta(&tweet("see https://t.co/x", &[Candidate::Cruz]), &model, &extractor).unwrap();
        assert!(m.has_link);
        let m = derive_meta(&tweet("Cruz wins", &[Candidate::Cruz]), &model, &extractor).unwrap();
        assert_eq!(m.proper_word_count, 2);
        assert_eq!(m.sarcasm_score, 0.0);
        let m = derive_meta(&tweet("lol Cruz", &[Candidate::Cruz]), &model, &extractor).unwrap();
        assert_eq!(m.sarcasm_score, 1.0);
        assert!(derive_meta(&tweet("nobody", &[]), &model, &extractor).is_err());

        let text = "Bernie's Super PAC Hypocrisy: Twice as Much Outside Money Spent Supporting \
                    Sanders as Promoting Clinton https://t.co/RVAi7X4shS";
        let mentions = crate::corpus::detect_mentions(text, &crate::corpus::Lexicon::default());
        assert_eq!(mentions, BTreeSet::from([Candidate::Clinton, Candidate::Sanders]));
        let m = derive_meta(&tweet(text, &Vec::from_iter(mentions)), &model, &extractor).unwrap();
        assert!(m.has_link);
    }
}

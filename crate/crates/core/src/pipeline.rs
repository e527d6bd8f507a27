//! Tweet → clues → sarcasm score → difficulty class.

use crate::corpus::Tweet;
use crate::difficulty::{default_tree, derive_meta, DecisionTree, DifficultyClass, TreeError, TweetMeta};
use crate::sarcasm::{
    calibrate_threshold, Calibration, ClueExtractor, SarcasmError, SarcasmModel, TrainOptions,
    REFERENCE_PREVALENCE,
};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Sarcasm(#[from] SarcasmError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("no tweet carries a gold sarcasm flag; supply a trained sarcasm model")]
    NoSarcasmGold,
}

/// Share of gold-flagged tweets marked sarcastic, when strictly inside (0, 1).
pub fn gold_prevalence(tweets: &[Tweet]) -> Option<f64> {
    let flags: Vec<bool> = tweets.iter().filter_map(|t| t.gold_sarcastic).collect();
    if flags.is_empty() {
        return None;
    }
    let p = flags.iter().filter(|&&f| f).count() as f64 / flags.len() as f64;
    (p > 0.0 && p < 1.0).then_some(p)
}

/// Trains on every tweet that has a gold sarcasm flag.
pub fn train_sarcasm(
    tweets: &[Tweet],
    extractor: &ClueExtractor,
    options: TrainOptions,
) -> Result<SarcasmModel, PipelineError> {
    let flagged: Vec<Tweet> = tweets.iter().filter(|t| t.gold_sarcastic.is_some()).cloned().collect();
    if flagged.is_empty() {
        return Err(PipelineError::NoSarcasmGold);
    }
    Ok(SarcasmModel::train_on_tweets(&flagged, extractor, options)?)
}

/// Calibrates the sarcasm threshold to the gold prevalence of `tweets`,
/// falling back to the reference prevalence when no usable gold exists.
pub fn calibrate(
    tweets: &[Tweet],
    model: &SarcasmModel,
    extractor: &ClueExtractor,
) -> Result<Calibration, PipelineError> {
    let scores: Vec<f64> = tweets.iter().map(|t| model.score(&extractor.extract(&t.text))).collect();
    let target = gold_prevalence(tweets).unwrap_or(REFERENCE_PREVALENCE);
    Ok(calibrate_threshold(&scores, target)?)
}

#[derive(Debug, Clone)]
pub struct DifficultyPipeline {
    pub extractor: ClueExtractor,
    pub model: SarcasmModel,
    pub threshold: f64,
    pub tree: DecisionTree,
}

impl DifficultyPipeline {
    /// Trains the sarcasm model on the corpus' gold flags, calibrates the
    /// threshold and builds the default tree.
    pub fn fit(tweets: &[Tweet], extractor: ClueExtractor, options: TrainOptions) -> Result<Self, PipelineError> {
        let model = train_sarcasm(tweets, &extractor, options)?;
        let calibration = calibrate(tweets, &model, &extractor)?;
        Ok(DifficultyPipeline {
            tree: default_tree(calibration.threshold),
            threshold: calibration.threshold,
            extractor,
            model,
        })
    }

    pub fn new(extractor: ClueExtractor, model: SarcasmModel, threshold: f64, tree: DecisionTree) -> Self {
        DifficultyPipeline {
            extractor,
            model,
            threshold,
            tree,
        }
    }

    pub fn meta(&self, tweet: &Tweet) -> Result<TweetMeta, PipelineError> {
        Ok(derive_meta(tweet, &self.model, &self.extractor)?)
    }

    pub fn classify(&self, tweet: &Tweet) -> Result<DifficultyClass, PipelineError> {
        Ok(self.tree.classify(&self.meta(tweet)?))
    }

    pub fn classify_all(&self, tweets: &[Tweet]) -> Result<Vec<DifficultyClass>, PipelineError> {
        tweets.iter().map(|t| self.classify(t)).collect()
    }
}

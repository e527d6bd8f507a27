//! Trains the clue-based sarcasm model on a handful of labeled tweets and
//! scores new text.

use crowdalloc::corpus::{Candidate, Tweet};
use crowdalloc::pipeline::{calibrate, train_sarcasm};
use crowdalloc::sarcasm::{ClueExtractor, Feature, TrainOptions};
use std::collections::BTreeSet;

fn tweet(id: &str, text: &str, sarcastic: bool) -> Tweet {
    Tweet {
        id: id.into(),
        text: text.into(),
        mentions: BTreeSet::from([Candidate::Trump]),
        gold: None,
        gold_sarcastic: Some(sarcastic),
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tweets = vec![
        tweet("1", "Trump says he has \"great\" ideas lol", true),
        tweet("2", "Oh sure Trump will fix it, yet again haha", true),
        tweet("3", "Trump rally in Ohio tonight!", false),
        tweet("4", "Trump talks trade policy on the debate stage", false),
        tweet("5", "Would Trump win the primary?", false),
        tweet("6", "Trump is SO presidential :)", true),
    ];
    let extractor = ClueExtractor::default();
    let model = train_sarcasm(&tweets, &extractor, TrainOptions::default())?;

    println!("{:<12} {:>10} {:>8}", "clue", "P(clue|s)", "weight");
    for f in Feature::ALL {
        println!("{:<12} {:>10.4} {:>8.4}", f.name(), model.cond_prob[f.index()], model.weights[f.index()]);
    }

    let calibration = calibrate(&tweets, &model, &extractor)?;
    println!("\nthreshold {:.4} flags {} of {} tweets", calibration.threshold, calibration.flagged, tweets.len());

    for text in [
        "Cruz \"wins\" again lol",
        "Sanders speaks in Iowa today",
        "WOW what a debate... would not miss it",
    ] {
        let f = extractor.extract(text);
        println!("{:.4}  {}  {text}", model.score(&f), f.bits());
    }
    Ok(())
}

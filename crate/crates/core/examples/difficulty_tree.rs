//! Classifies tweets with the built-in difficulty tree and with a tree
//! loaded from JSON.

use crowdalloc::corpus::{detect_mentions, Lexicon, Tweet};
use crowdalloc::difficulty::{default_tree, derive_meta, DecisionTree};
use crowdalloc::sarcasm::{ClueExtractor, SarcasmModel};

const TREE: &str = r#"{
  "predicate": "mentions_multiple",
  "true": {"leaf": "hard"},
  "false": {
    "predicate": "is_short", "arg": 10,
    "true": {"leaf": "easy"},
    "false": {"leaf": "very_easy"}
  }
}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let lexicon = Lexicon::default();
    let extractor = ClueExtractor::default();
    // Weight on laughter only, so "lol" pushes a tweet over the threshold.
    let model = SarcasmModel::from_json(
        r#"{"cond_prob":[0,0,0,0,1,0,0],"weights":[0,0,0,0,1,0,0],
            "feature_order":["quotes","punctuation","all_caps","emoticon","laugh","surprise","comparison"],
            "corpus_fingerprint":"example"}"#,
    )?;
    let texts = [
        "Sanders outlines his plan for college tuition at a packed town hall in New Hampshire tonight",
        "Trump wins Nevada",
        "Clinton and Sanders trade barbs over Wall Street money during the debate https://t.co/x",
        "Cruz and Trump both claim victory lol",
    ];

    let builtin = default_tree(0.5);
    let custom = DecisionTree::from_json(TREE)?;
    println!("built-in tree has {} leaves; custom tree has {}", builtin.leaf_count(), custom.leaf_count());
    for (i, text) in texts.iter().enumerate() {
        let tweet = Tweet {
            id: i.to_string(),
            text: text.to_string(),
            mentions: detect_mentions(text, &lexicon),
            gold: None,
            gold_sarcastic: None,
        };
        let meta = derive_meta(&tweet, &model, &extractor)?;
        println!(
            "{:<10} {:<10} {text}",
            builtin.classify(&meta).name(),
            custom.classify(&meta).name()
        );
    }
    Ok(())
}

//! Loads the bundled demo fixture and reports pool sizes and gold coverage.

use std::path::Path;

use crowdalloc::corpus::{validate_corpus, Corpus, Lexicon};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/demo");
    let mut corpus = Corpus::load_tweets(&dir.join("tweets.jsonl"), &Lexicon::default())?;
    corpus.load_labels(&dir.join("labels.jsonl"))?;

    for required in [5, 7] {
        let r = validate_corpus(&corpus, required);
        println!(
            "pool >= {required}: ready {}  (pools {}..={}, missing gold {}, mentions per tweet {:?})",
            r.experiment_ready, r.min_pool, r.max_pool, r.missing_gold.len(), r.mention_histogram
        );
    }
    Ok(())
}

//! Corpus files: generation, round trip through JSON Lines, validation.

use std::path::Path;

use crowdalloc::corpus::{validate_corpus, Corpus, Lexicon};
use crowdalloc::simulation::demo::{generate, DemoSpec};

#[test]
fn generated_corpus_round_trips() {
    let corpus = generate(&DemoSpec {
        tweets: 60,
        pool: 4,
        seed: 5,
        ..DemoSpec::default()
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    corpus.write_tweets(&dir.path().join("t.jsonl")).unwrap();
    corpus.write_labels(&dir.path().join("l.jsonl")).unwrap();
    let mut back = Corpus::load_tweets(&dir.path().join("t.jsonl"), &Lexicon::default()).unwrap();
    back.load_labels(&dir.path().join("l.jsonl")).unwrap();
    assert_eq!(back.tweets(), corpus.tweets());
    assert_eq!(back.pools(), corpus.pools());
}

#[test]
fn bundled_fixture_is_experiment_ready() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/demo");
    let mut corpus = Corpus::load_tweets(&dir.join("tweets.jsonl"), &Lexicon::default()).unwrap();
    assert_eq!(corpus.load_labels(&dir.join("labels.jsonl")).unwrap(), 100);
    assert_eq!(corpus.len(), 20);
    let report = validate_corpus(&corpus, 5);
    assert!(report.experiment_ready);
    assert_eq!((report.min_pool, report.max_pool), (5, 5));
    assert!(!validate_corpus(&corpus, 7).experiment_ready);
}

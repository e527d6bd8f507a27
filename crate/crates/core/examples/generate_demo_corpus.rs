//! Writes a synthetic demo corpus (tweets with gold labels plus recorded
//! label pools) as two JSON Lines files.
//!
//!     cargo run --example generate_demo_corpus -- OUT_DIR [TWEETS] [POOL] [SEED]

use std::path::PathBuf;

use crowdalloc::corpus::validate_corpus;
use crowdalloc::simulation::demo::{generate, DemoSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let out = PathBuf::from(args.first().map(String::as_str).unwrap_or("demo-corpus"));
    let mut spec = DemoSpec::default();
    if let Some(n) = args.get(1) {
        spec.tweets = n.parse()?;
    }
    if let Some(n) = args.get(2) {
        spec.pool = n.parse()?;
    }
    if let Some(s) = args.get(3) {
        spec.seed = s.parse()?;
    }

    let corpus = generate(&spec)?;
    std::fs::create_dir_all(&out)?;
    corpus.write_tweets(&out.join("tweets.jsonl"))?;
    corpus.write_labels(&out.join("labels.jsonl"))?;

    let report = validate_corpus(&corpus, spec.pool);
    println!(
        "{} tweets, {} label records, pools {}..={}, experiment ready: {}",
        corpus.len(),
        corpus.records().count(),
        report.min_pool,
        report.max_pool,
        report.experiment_ready
    );
    println!("wrote {}", out.display());
    Ok(())
}

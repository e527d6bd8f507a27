//! Cohen's Kappa and percent agreement between gold and crowd labels.

use crowdalloc::corpus::Sentiment::{self, *};
use crowdalloc::evaluation::{cohens_kappa, percent_agreement, ConfusionMatrix};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut pairs: Vec<(Sentiment, Sentiment)> = Vec::new();
    pairs.extend(std::iter::repeat_n((Positive, Positive), 20));
    pairs.extend(std::iter::repeat_n((Negative, Negative), 20));
    pairs.extend(std::iter::repeat_n((Positive, Negative), 10));
    pairs.extend(std::iter::repeat_n((Negative, Positive), 10));

    let m = ConfusionMatrix::from_pairs(&pairs);
    println!("gold \\ crowd   pos  neu  neg");
    for s in Sentiment::ALL {
        let row = m.0[s.index()];
        println!("{:<13} {:>4} {:>4} {:>4}", s.name(), row[0], row[1], row[2]);
    }
    println!(
        "observed {:.4}  chance {:.4}  kappa {:.4}  agreement {:.2}%",
        m.observed_agreement().unwrap_or(0.0),
        m.chance_agreement().unwrap_or(0.0),
        cohens_kappa(&pairs)?,
        100.0 * percent_agreement(&pairs)?
    );
    Ok(())
}

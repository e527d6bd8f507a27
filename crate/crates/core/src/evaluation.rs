//! Agreement with gold labels, budget accounting and descriptive tables.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::allocation::AllocationOutcome;
use crate::corpus::{Candidate, Sentiment, Tweet};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EvalError {
    #[error("no rating pairs to evaluate")]
    Empty,
    #[error("invalid amount {0:?}")]
    BadAmount(String),
}

/// Gold (rows) against predicted (columns) counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionMatrix(pub [[u64; 3]; 3]);

impl ConfusionMatrix {
    pub fn from_pairs(pairs: &[(Sentiment, Sentiment)]) -> Self {
        let mut m = ConfusionMatrix::default();
        for (gold, predicted) in pairs {
            m.0[gold.index()][predicted.index()] += 1;
        }
        m
    }

    pub fn total(&self) -> u64 {
        self.0.iter().flatten().sum()
    }

    pub fn observed_agreement(&self) -> Option<f64> {
        let n = self.total();
        (n > 0).then(|| (0..3).map(|i| self.0[i][i]).sum::<u64>() as f64 / n as f64)
    }

    pub fn chance_agreement(&self) -> Option<f64> {
        let n = self.total();
        if n == 0 {
            return None;
        }
        let n = n as f64;
        Some(
            (0..3)
                .map(|k| {
                    let row: u64 = self.0[k].iter().sum();
                    let col: u64 = (0..3).map(|i| self.0[i][k]).sum();
                    (row as f64 / n) * (col as f64 / n)
                })
                .sum(),
        )
    }

    /// `(p_o - p_e) / (1 - p_e)`; 1 when both raters use one identical category.
    ///
    /// Evaluated as `(N·D - S) / (N² - S)` over integer counts (D the diagonal
    /// sum, S the sum of row × column marginals), so the only rounding is
    /// the final division.
    pub fn kappa(&self) -> Option<f64> {
        let n = self.total() as i128;
        if n == 0 {
            return None;
        }
        let diagonal: i128 = (0..3).map(|i| self.0[i][i] as i128).sum();
        let chance: i128 = (0..3)
            .map(|k| {
                let row: u64 = self.0[k].iter().sum();
                let col: u64 = (0..3).map(|i| self.0[i][k]).sum();
                row as i128 * col as i128
            })
            .sum();
        let denominator = n * n - chance;
        if denominator == 0 {
            return Some(1.0);
        }
        Some((n * diagonal - chance) as f64 / denominator as f64)
    }
}

pub fn cohens_kappa(pairs: &[(Sentiment, Sentiment)]) -> Result<f64, EvalError> {
    ConfusionMatrix::from_pairs(pairs).kappa().ok_or(EvalError::Empty)
}

pub fn percent_agreement(pairs: &[(Sentiment, Sentiment)]) -> Result<f64, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(pairs.iter().filter(|(g, p)| g == p).count() as f64 / pairs.len() as f64)
}

/// A currency amount held in millionths, so products stay exact.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Money {
    micros: u64,
}

impl Money {
    pub const fn from_micros(micros: u64) -> Self {
        Money { micros }
    }

    pub fn micros(self) -> u64 {
        self.micros
    }

    /// Rounds to the nearest millionth; negative or non-finite values are rejected.
    pub fn from_f64(amount: f64) -> Result<Self, EvalError> {
        if !(amount.is_finite() && amount >= 0.0) {
            return Err(EvalError::BadAmount(amount.to_string()));
        }
        Ok(Money {
            micros: (amount * 1e6).round() as u64,
        })
    }

    pub fn as_f64(self) -> f64 {
        self.micros as f64 / 1e6
    }

    pub fn times(self, n: u64) -> Money {
        Money {
            micros: self.micros * n,
        }
    }
}

impl fmt::Display for Money {
    /// At least two decimals, more only when needed.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let whole = self.micros / 1_000_000;
        let frac = format!("{:06}", self.micros % 1_000_000);
        let trimmed = frac.trim_end_matches('0');
        let shown = if trimmed.len() < 2 { &frac[..2] } else { trimmed };
        write!(f, "{whole}.{shown}")
    }
}

impl FromStr for Money {
    type Err = EvalError;

    /// Parses a plain decimal such as `0.05` exactly.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || EvalError::BadAmount(s.to_string());
        let s = s.trim().trim_start_matches('$');
        let (whole, frac) = s.split_once('.').unwrap_or((s, ""));
        if (whole.is_empty() && frac.is_empty())
            || frac.len() > 6
            || !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit())
        {
            return Err(bad());
        }
        let whole: u64 = if whole.is_empty() { 0 } else { whole.parse().map_err(|_| bad())? };
        let frac_micros: u64 = format!("{frac:0<6}").parse().map_err(|_| bad())?;
        Ok(Money {
            micros: whole * 1_000_000 + frac_micros,
        })
    }
}

impl Serialize for Money {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.as_f64())
    }
}

impl<'de> Deserialize<'de> for Money {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(x) => Money::from_f64(x),
            Raw::Text(s) => s.parse(),
        }
        .map_err(serde::de::Error::custom)
    }
}

/// Cost of `total_tasks` at `price_per_task`.
pub fn budget(total_tasks: u64, price_per_task: Money) -> Money {
    price_per_task.times(total_tasks)
}

/// Candidate × sentiment counts with marginals.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SentimentTable {
    /// Indexed `[candidate][sentiment]`.
    pub counts: [[u64; 3]; 4],
}

impl SentimentTable {
    pub fn from_labels<'a>(labels: impl IntoIterator<Item = (&'a Candidate, &'a Sentiment)>) -> Self {
        let mut t = SentimentTable::default();
        for (c, s) in labels {
            t.counts[c.index()][s.index()] += 1;
        }
        t
    }

    pub fn candidate_total(&self, c: Candidate) -> u64 {
        self.counts[c.index()].iter().sum()
    }

    pub fn sentiment_total(&self, s: Sentiment) -> u64 {
        self.counts.iter().map(|row| row[s.index()]).sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Sentiments as rows, candidates as columns, sums on the last row and column.
    pub fn render(&self, title: &str) -> String {
        let mut out = format!("{title}\n");
        out.push_str(&format!("{:<10}", ""));
        for c in Candidate::ALL {
            out.push_str(&format!("{:>9}", c.name()));
        }
        out.push_str(&format!("{:>9}\n", "Sum"));
        for s in Sentiment::ALL {
            out.push_str(&format!("{:<10}", s.name()));
            for c in Candidate::ALL {
                out.push_str(&format!("{:>9}", self.counts[c.index()][s.index()]));
            }
            out.push_str(&format!("{:>9}\n", self.sentiment_total(s)));
        }
        out.push_str(&format!("{:<10}", "Sum"));
        for c in Candidate::ALL {
            out.push_str(&format!("{:>9}", self.candidate_total(c)));
        }
        out.push_str(&format!("{:>9}\n", self.total()));
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("sentiment,Clinton,Cruz,Sanders,Trump,sum\n");
        for s in Sentiment::ALL {
            out.push_str(s.name());
            for c in Candidate::ALL {
                out.push_str(&format!(",{}", self.counts[c.index()][s.index()]));
            }
            out.push_str(&format!(",{}\n", self.sentiment_total(s)));
        }
        out.push_str("sum");
        for c in Candidate::ALL {
            out.push_str(&format!(",{}", self.candidate_total(c)));
        }
        out.push_str(&format!(",{}\n", self.total()));
        out
    }
}

pub fn sentiment_distribution<'a>(
    labels: impl IntoIterator<Item = (&'a Candidate, &'a Sentiment)>,
) -> SentimentTable {
    SentimentTable::from_labels(labels)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramSpec {
    pub lo: f64,
    pub hi: f64,
    pub buckets: usize,
}

impl Default for HistogramSpec {
    fn default() -> Self {
        HistogramSpec {
            lo: 1.0,
            hi: 600.0,
            buckets: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bucket {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DurationSummary {
    pub count: usize,
    pub mean: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub buckets: Vec<Bucket>,
    pub below: u64,
    pub above: u64,
}

impl DurationSummary {
    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bucket_lo,bucket_hi,count\n");
        for b in &self.buckets {
            out.push_str(&format!("{:.2},{:.2},{}\n", b.lo, b.hi, b.count));
        }
        out
    }
}

/// Summary statistics and a fixed-width histogram over `spec`'s range.
/// Values outside the range are counted in `below`/`above`; the last bucket
/// is closed on the right.
pub fn duration_stats(durations: &[f64], spec: HistogramSpec) -> DurationSummary {
    let width = (spec.hi - spec.lo) / spec.buckets.max(1) as f64;
    let mut buckets: Vec<Bucket> = (0..spec.buckets)
        .map(|i| Bucket {
            lo: spec.lo + i as f64 * width,
            hi: spec.lo + (i + 1) as f64 * width,
            count: 0,
        })
        .collect();
    let (mut below, mut above) = (0, 0);
    for &d in durations {
        if d < spec.lo {
            below += 1;
        } else if d > spec.hi {
            above += 1;
        } else if !buckets.is_empty() {
            let i = (((d - spec.lo) / width) as usize).min(buckets.len() - 1);
            buckets[i].count += 1;
        }
    }
    let count = durations.len();
    let (mean, min, max) = if count == 0 {
        (None, None, None)
    } else {
        (
            Some(durations.iter().sum::<f64>() / count as f64),
            durations.iter().copied().reduce(f64::min),
            durations.iter().copied().reduce(f64::max),
        )
    };
    DurationSummary {
        count,
        mean,
        min,
        max,
        buckets,
        below,
        above,
    }
}

/// Gold vs. final label for every (tweet, candidate) unit with gold.
pub fn rating_pairs(
    outcome: &AllocationOutcome,
    tweets: &HashMap<&str, &Tweet>,
) -> Vec<(Candidate, Sentiment, Sentiment)> {
    let mut pairs = Vec::new();
    for t in &outcome.tweets {
        let Some(gold) = tweets.get(t.tweet_id.as_str()).and_then(|tw| tw.gold.as_ref()) else {
            continue;
        };
        for (candidate, predicted) in &t.final_labels {
            if let Some(g) = gold.get(candidate) {
                pairs.push((*candidate, *g, *predicted));
            }
        }
    }
    pairs
}

/// Accuracy and cost figures for one policy run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetrics {
    pub total_tasks: u64,
    pub budget: Money,
    pub kappa_pooled: f64,
    pub kappa_per_candidate: [Option<f64>; 4],
    pub agreement: f64,
    pub tie_events: u64,
    pub units: usize,
}

pub fn evaluate_outcome(
    outcome: &AllocationOutcome,
    tweets: &HashMap<&str, &Tweet>,
    price_per_task: Money,
) -> Result<RunMetrics, EvalError> {
    let pairs = rating_pairs(outcome, tweets);
    let pooled: Vec<(Sentiment, Sentiment)> = pairs.iter().map(|&(_, g, p)| (g, p)).collect();
    let kappa_pooled = cohens_kappa(&pooled)?;
    let agreement = percent_agreement(&pooled)?;
    let kappa_per_candidate = Candidate::ALL.map(|c| {
        let subset: Vec<_> = pairs
            .iter()
            .filter(|(cand, ..)| *cand == c)
            .map(|&(_, g, p)| (g, p))
            .collect();
        cohens_kappa(&subset).ok()
    });
    let total_tasks = outcome.total_tasks as u64;
    Ok(RunMetrics {
        total_tasks,
        budget: budget(total_tasks, price_per_task),
        kappa_pooled,
        kappa_per_candidate,
        agreement,
        tie_events: outcome.tie_events as u64,
        units: pooled.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use Sentiment::*;

    fn pairs_from_counts(counts: [[u64; 3]; 3]) -> Vec<(Sentiment, Sentiment)> {
        let mut out = Vec::new();
        for g in Sentiment::ALL {
            for p in Sentiment::ALL {
                for _ in 0..counts[g.index()][p.index()] {
                    out.push((g, p));
                }
            }
        }
        out
    }

    /// Kappa straight from a count table with integer marginals.
    fn kappa_oracle(counts: [[u64; 3]; 3]) -> f64 {
        let n: u64 = counts.iter().flatten().sum();
        let diag: u64 = (0..3).map(|i| counts[i][i]).sum();
        let mut chance = 0u128;
        for k in 0..3 {
            let row: u64 = counts[k].iter().sum();
            let col: u64 = counts.iter().map(|r| r[k]).sum();
            chance += row as u128 * col as u128;
        }
        let nn = (n as u128 * n as u128) as f64;
        let po = diag as f64 / n as f64;
        let pe = chance as f64 / nn;
        if chance as f64 == nn {
            1.0
        } else {
            (po - pe) / (1.0 - pe)
        }
    }

    #[test]
    fn perfect_agreement() {
        let pairs = vec![(Positive, Positive), (Neutral, Neutral), (Negative, Negative)];
        assert_eq!(cohens_kappa(&pairs).unwrap(), 1.0);
        assert_eq!(percent_agreement(&pairs).unwrap(), 1.0);
        assert_eq!(cohens_kappa(&[(Neutral, Neutral); 4]).unwrap(), 1.0);
    }

    #[test]
    fn hand_computed_fixture() {
        let counts = [[20, 0, 10], [0, 0, 0], [10, 0, 20]];
        let pairs = pairs_from_counts(counts);
        let m = ConfusionMatrix::from_pairs(&pairs);
        assert_eq!(m.observed_agreement().unwrap(), 2.0 / 3.0);
        assert_eq!(m.chance_agreement().unwrap(), 0.5);
        assert_eq!(cohens_kappa(&pairs).unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn half_agreement_and_empty() {
        let pairs = vec![(Positive, Positive), (Positive, Negative)];
        assert_eq!(percent_agreement(&pairs).unwrap(), 0.5);
        assert_eq!(cohens_kappa(&[]), Err(EvalError::Empty));
        assert_eq!(percent_agreement(&[]), Err(EvalError::Empty));
    }

    #[test]
    fn matches_oracle_on_random_tables() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(100);
        for _ in 0..100 {
            let mut counts = [[0u64; 3]; 3];
            for row in counts.iter_mut() {
                for cell in row.iter_mut() {
                    *cell = rng.random_range(0..50);
                }
            }
            counts[0][0] += 1;
            let k = cohens_kappa(&pairs_from_counts(counts)).unwrap();
            assert!((k - kappa_oracle(counts)).abs() <= 1e-12);
        }
    }

    #[test]
    fn independent_raters_have_near_zero_kappa() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let draw = |rng: &mut rand_chacha::ChaCha8Rng| Sentiment::ALL[rng.random_range(0..3)];
        let pairs: Vec<_> = (0..10_000).map(|_| (draw(&mut rng), draw(&mut rng))).collect();
        assert!(cohens_kappa(&pairs).unwrap().abs() <= 0.02);
    }

    #[test]
    fn money_is_exact() {
        let price: Money = "0.05".parse().unwrap();
        assert_eq!(budget(5075, price), Money::from_micros(253_750_000));
        assert_eq!(budget(5075, price).as_f64(), 253.75);
        assert_eq!(budget(5075, price).to_string(), "253.75");
        assert_eq!(budget(0, price), Money::default());
        assert_eq!(budget(3000, price).to_string(), "150.00");
        assert_eq!(Money::from_f64(0.05).unwrap(), price);
        assert_eq!("0.0125".parse::<Money>().unwrap().to_string(), "0.0125");
        assert!("-1".parse::<Money>().is_err());
        assert!(Money::from_f64(-0.5).is_err());
    }

    #[test]
    fn distribution_tables() {
        let empty = sentiment_distribution(std::iter::empty());
        assert_eq!(empty.total(), 0);
        let one = sentiment_distribution([(&Candidate::Trump, &Positive)]);
        assert_eq!(one.counts[Candidate::Trump.index()], [1, 0, 0]);
        assert_eq!(one.candidate_total(Candidate::Trump), 1);
        assert_eq!(one.sentiment_total(Positive), 1);

        // 800 labels spread over candidates: row sums equal per-candidate counts.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(800);
        let labels: Vec<(Candidate, Sentiment)> = (0..800)
            .map(|_| (Candidate::ALL[rng.random_range(0..4)], Sentiment::ALL[rng.random_range(0..3)]))
            .collect();
        let table = sentiment_distribution(labels.iter().map(|(c, s)| (c, s)));
        for c in Candidate::ALL {
            let expected = labels.iter().filter(|(x, _)| *x == c).count() as u64;
            assert_eq!(table.candidate_total(c), expected);
        }
        assert_eq!(table.total(), 800);
        assert!(table.render("t").contains("Sum"));
    }

    #[test]
    fn duration_examples() {
        let s = duration_stats(&[60.0, 120.0], HistogramSpec::default());
        assert_eq!(s.mean, Some(90.0));
        assert_eq!(s.min, Some(60.0));
        assert_eq!(s.max, Some(120.0));
        assert_eq!(s.buckets.iter().map(|b| b.count).sum::<u64>(), 2);

        let empty = duration_stats(&[], HistogramSpec::default());
        assert!(empty.is_empty());
        assert_eq!(empty.mean, None);

        // Symmetric offsets around 85.1 keep the mean.
        let fixture: Vec<f64> = (0..100)
            .flat_map(|i| [85.1 - i as f64 * 0.5, 85.1 + i as f64 * 0.5])
            .collect();
        let s = duration_stats(&fixture, HistogramSpec::default());
        assert!((s.mean.unwrap() - 85.1).abs() <= 1e-9);

        let edges = duration_stats(&[0.5, 1.0, 600.0, 700.0], HistogramSpec::default());
        assert_eq!((edges.below, edges.above), (1, 1));
        assert_eq!(edges.buckets[0].count, 1);
        assert_eq!(edges.buckets.last().unwrap().count, 1);
    }

    fn sentiment() -> impl Strategy<Value = Sentiment> {
        prop_oneof![Just(Positive), Just(Neutral), Just(Negative)]
    }

    proptest! {
        #[test]
        fn kappa_is_symmetric(pairs in prop::collection::vec((sentiment(), sentiment()), 1..60)) {
            let swapped: Vec<_> = pairs.iter().map(|&(a, b)| (b, a)).collect();
            let k1 = cohens_kappa(&pairs).unwrap();
            let k2 = cohens_kappa(&swapped).unwrap();
            prop_assert!((k1 - k2).abs() <= 1e-12);
            prop_assert!((-1.0..=1.0 + 1e-12).contains(&k1));
            let po = percent_agreement(&pairs).unwrap();
            prop_assert_eq!(k1 == 1.0, po == 1.0);
        }
    }
}

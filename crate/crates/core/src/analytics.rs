//! Majority-vote success probabilities under the binary error model.
//!
//! Every worker is independently correct with probability `p`, and all
//! incorrect workers give the same wrong label. A dynamic scheme asks
//! `initial` workers, stops if they are unanimous, and otherwise asks
//! `extra` more; the decision is the majority over everything collected
//! (an even split counts as a fair coin).

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AnalyticsError {
    #[error("fixed schemes need an odd worker count, got {0}")]
    EvenFixed(usize),
    #[error("invalid scheme: {0}")]
    BadScheme(String),
    #[error("probability {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error("enumeration over {0} workers exceeds the limit of {MAX_ENUMERATED_WORKERS}")]
    TooManyWorkers(usize),
    #[error("supply either an accuracy or a unanimity rate, not both")]
    BothBases,
    #[error("supply an accuracy or a unanimity rate")]
    NoBasis,
}

pub const MAX_ENUMERATED_WORKERS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Fixed(usize),
    Dynamic { initial: usize, extra: usize },
}

impl Scheme {
    pub fn validate(self) -> Result<Self, AnalyticsError> {
        match self {
            Scheme::Fixed(k) if k == 0 || k % 2 == 0 => Err(AnalyticsError::EvenFixed(k)),
            Scheme::Dynamic { initial, extra } if initial < 2 || extra < 1 => Err(AnalyticsError::BadScheme(
                format!("dynamic schemes need initial >= 2 and extra >= 1, got {initial}+{extra}"),
            )),
            s => Ok(s),
        }
    }

    /// Worst-case number of workers.
    pub fn max_workers(self) -> usize {
        match self {
            Scheme::Fixed(k) => k,
            Scheme::Dynamic { initial, extra } => initial + extra,
        }
    }

    pub fn label(self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Fixed(k) => write!(f, "trad{k}"),
            Scheme::Dynamic { initial, extra } => write!(f, "dyn{initial}+{extra}"),
        }
    }
}

impl FromStr for Scheme {
    type Err = AnalyticsError;

    /// `tradK` / `fixedK` or `dynN+M`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase();
        let bad = || AnalyticsError::BadScheme(format!("cannot parse scheme {s:?}"));
        let scheme = if let Some(rest) = key.strip_prefix("trad").or_else(|| key.strip_prefix("fixed")) {
            Scheme::Fixed(rest.parse().map_err(|_| bad())?)
        } else if let Some(rest) = key.strip_prefix("dyn") {
            let (n, m) = rest.split_once('+').ok_or_else(bad)?;
            Scheme::Dynamic {
                initial: n.parse().map_err(|_| bad())?,
                extra: m.parse().map_err(|_| bad())?,
            }
        } else {
            return Err(bad());
        };
        scheme.validate()
    }
}

fn check_p(p: f64) -> Result<f64, AnalyticsError> {
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(AnalyticsError::OutOfRange(p))
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn binomial_pmf(n: usize, k: usize, p: f64) -> f64 {
    binomial(n, k) * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

/// Value of a final tally: 1 for a correct majority, 1/2 for a split.
fn decide(correct: usize, wrong: usize) -> f64 {
    match correct.cmp(&wrong) {
        std::cmp::Ordering::Greater => 1.0,
        std::cmp::Ordering::Equal => 0.5,
        std::cmp::Ordering::Less => 0.0,
    }
}

/// Probability that `k` (odd) independent workers produce a correct majority:
/// `sum_{i=ceil(k/2)}^{k} C(k,i) p^i (1-p)^(k-i)`.
pub fn pm_fixed(k: usize, p: f64) -> Result<f64, AnalyticsError> {
    Scheme::Fixed(k).validate()?;
    let p = check_p(p)?;
    Ok((k.div_ceil(2)..=k).map(|i| binomial_pmf(k, i, p)).sum())
}

/// Success probability of a dynamic `initial(+extra)` scheme.
///
/// Conditions on the number of correct first-round workers: unanimous
/// rounds stop (correct only if all were right); split rounds add
/// `extra` workers and take the majority over all labels.
pub fn pm_dynamic(initial: usize, extra: usize, p: f64) -> Result<f64, AnalyticsError> {
    Scheme::Dynamic { initial, extra }.validate()?;
    let p = check_p(p)?;
    let mut total = p.powi(initial as i32);
    for c in 1..initial {
        let first = binomial_pmf(initial, c, p);
        let second: f64 = (0..=extra)
            .map(|j| binomial_pmf(extra, j, p) * decide(c + j, initial + extra - c - j))
            .sum();
        total += first * second;
    }
    Ok(total)
}

pub fn pm(scheme: Scheme, p: f64) -> Result<f64, AnalyticsError> {
    match scheme {
        Scheme::Fixed(k) => pm_fixed(k, p),
        Scheme::Dynamic { initial, extra } => pm_dynamic(initial, extra, p),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Enumeration {
    pub success: f64,
    /// Sum of the weights of every realized outcome sequence.
    pub total_weight: f64,
    pub sequences: usize,
}

/// Exact success probability by walking every realized correct/incorrect
/// sequence: unanimous first rounds end after `initial` workers, all other
/// sequences continue through the second round.
pub fn enumerate_scheme(scheme: Scheme, p: f64) -> Result<Enumeration, AnalyticsError> {
    let scheme = scheme.validate()?;
    let p = check_p(p)?;
    if scheme.max_workers() > MAX_ENUMERATED_WORKERS {
        return Err(AnalyticsError::TooManyWorkers(scheme.max_workers()));
    }
    let weight = |correct: u32, wrong: u32| p.powi(correct as i32) * (1.0 - p).powi(wrong as i32);
    let mut out = Enumeration {
        success: 0.0,
        total_weight: 0.0,
        sequences: 0,
    };
    let mut record = |correct: u32, wrong: u32| {
        let w = weight(correct, wrong);
        out.total_weight += w;
        out.success += w * decide(correct as usize, wrong as usize);
        out.sequences += 1;
    };
    match scheme {
        Scheme::Fixed(k) => {
            for mask in 0u32..(1 << k) {
                let c = mask.count_ones();
                record(c, k as u32 - c);
            }
        }
        Scheme::Dynamic { initial, extra } => {
            let full = (1u32 << initial) - 1;
            for first in 0u32..=full {
                let c1 = first.count_ones();
                if first == 0 || first == full {
                    record(c1, initial as u32 - c1);
                    continue;
                }
                for second in 0u32..(1 << extra) {
                    let c = c1 + second.count_ones();
                    record(c, (initial + extra) as u32 - c);
                }
            }
        }
    }
    Ok(out)
}

/// What the expected task count is conditioned on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TaskBasis {
    /// Per-worker accuracy under the binary model.
    Accuracy(f64),
    /// Observed fraction of items whose first round was unanimous.
    Unanimity(f64),
}

impl TaskBasis {
    pub fn from_options(p: Option<f64>, u: Option<f64>) -> Result<Self, AnalyticsError> {
        match (p, u) {
            (Some(_), Some(_)) => Err(AnalyticsError::BothBases),
            (Some(p), None) => Ok(TaskBasis::Accuracy(check_p(p)?)),
            (None, Some(u)) => Ok(TaskBasis::Unanimity(check_p(u)?)),
            (None, None) => Err(AnalyticsError::NoBasis),
        }
    }
}

/// Probability that `n` workers are unanimous under the binary model.
pub fn unanimity_rate(n: usize, p: f64) -> f64 {
    p.powi(n as i32) + (1.0 - p).powi(n as i32)
}

pub fn expected_tasks(scheme: Scheme, basis: TaskBasis, n_items: u64) -> Result<f64, AnalyticsError> {
    let items = n_items as f64;
    match scheme.validate()? {
        Scheme::Fixed(k) => Ok(k as f64 * items),
        Scheme::Dynamic { initial, extra } => {
            let u = match basis {
                TaskBasis::Accuracy(p) => unanimity_rate(initial, check_p(p)?),
                TaskBasis::Unanimity(u) => check_p(u)?,
            };
            Ok(items * (initial as f64 + extra as f64 * (1.0 - u)))
        }
    }
}

/// Fraction of `baseline` saved by spending `tasks` instead.
pub fn savings_fraction(tasks: f64, baseline: f64) -> f64 {
    (baseline - tasks) / baseline
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub p: f64,
    pub scheme: String,
    #[serde(rename = "P_M")]
    pub pm: f64,
    pub expected_tasks_per_item: f64,
}

/// `points` evenly spaced values covering `[0, 1]`.
pub fn uniform_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        n => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

/// One row per (p, scheme), grid-major.
pub fn curve(schemes: &[Scheme], grid: &[f64]) -> Result<Vec<CurveRow>, AnalyticsError> {
    let mut rows = Vec::with_capacity(schemes.len() * grid.len());
    for &p in grid {
        for &scheme in schemes {
            rows.push(CurveRow {
                p,
                scheme: scheme.label(),
                pm: pm(scheme, p)?,
                expected_tasks_per_item: expected_tasks(scheme, TaskBasis::Accuracy(p), 1)?,
            });
        }
    }
    Ok(rows)
}

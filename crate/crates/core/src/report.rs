//! Experiment reports: per-run CSV, text summary, distribution tables and
//! outcome files.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::allocation::{AllocationOutcome, AllocationPolicy};
use crate::corpus::Candidate;
use crate::evaluation::{sentiment_distribution, DurationSummary, Money, RunMetrics, SentimentTable};
use crate::simulation::Mode;

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub run: u32,
    pub metrics: RunMetrics,
    pub outcome: AllocationOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyResult {
    pub policy: AllocationPolicy,
    pub runs: Vec<RunResult>,
}

/// Averages over the runs of one policy.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanMetrics {
    pub total_tasks: f64,
    pub budget: f64,
    pub kappa_pooled: f64,
    pub kappa_per_candidate: [Option<f64>; 4],
    pub agreement: f64,
    pub tie_events: f64,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

impl PolicyResult {
    pub fn mean(&self) -> MeanMetrics {
        let m = |f: &dyn Fn(&RunMetrics) -> f64| mean(self.runs.iter().map(|r| f(&r.metrics))).unwrap_or(f64::NAN);
        MeanMetrics {
            total_tasks: m(&|r| r.total_tasks as f64),
            budget: m(&|r| r.budget.as_f64()),
            kappa_pooled: m(&|r| r.kappa_pooled),
            kappa_per_candidate: std::array::from_fn(|i| {
                mean(self.runs.iter().filter_map(|r| r.metrics.kappa_per_candidate[i]))
            }),
            agreement: m(&|r| r.agreement),
            tie_events: m(&|r| r.tie_events as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub seed: u64,
    pub runs: u32,
    pub mode: Mode,
    pub price_per_task: Money,
    pub source: String,
    pub tweets: usize,
    pub class_counts: [usize; 4],
    pub threshold: f64,
    pub policies: Vec<PolicyResult>,
    /// Gold labels grouped by candidate and sentiment.
    pub expert_distribution: SentimentTable,
    /// Recorded task durations, replay mode only.
    pub durations: Option<DurationSummary>,
}

pub const RUNS_CSV_HEADER: [&str; 11] = [
    "policy",
    "run",
    "total_tasks",
    "budget",
    "kappa_pooled",
    "kappa_clinton",
    "kappa_cruz",
    "kappa_sanders",
    "kappa_trump",
    "agreement",
    "tie_events",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

impl EvalReport {
    pub fn policy(&self, name: &str) -> Option<&PolicyResult> {
        self.policies.iter().find(|p| p.policy.name == name)
    }

    /// The comparison baseline: Trad-5 when present, otherwise the policy
    /// with the most tasks.
    pub fn baseline(&self) -> Option<&PolicyResult> {
        self.policy("trad5").or_else(|| {
            self.policies
                .iter()
                .max_by(|a, b| a.mean().total_tasks.total_cmp(&b.mean().total_tasks))
        })
    }

    /// Final labels of the baseline's first run, grouped by candidate and sentiment.
    pub fn crowd_distribution(&self) -> Option<(String, SentimentTable)> {
        let base = self.baseline()?;
        let run = base.runs.first()?;
        let table = sentiment_distribution(run.outcome.tweets.iter().flat_map(|t| t.final_labels.iter()));
        Some((format!("{} run {}", base.policy.name, run.run), table))
    }

    /// One row per policy and run, then one mean row per policy.
    pub fn runs_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(RUNS_CSV_HEADER).expect("in-memory write");
        for p in &self.policies {
            for r in &p.runs {
                let m = &r.metrics;
                let mut row = vec![
                    p.policy.name.clone(),
                    r.run.to_string(),
                    m.total_tasks.to_string(),
                    m.budget.to_string(),
                    format!("{:.6}", m.kappa_pooled),
                ];
                row.extend(m.kappa_per_candidate.iter().map(|k| opt(*k)));
                row.push(format!("{:.6}", m.agreement));
                row.push(m.tie_events.to_string());
                w.write_record(&row).expect("in-memory write");
            }
            let m = p.mean();
            let mut row = vec![
                p.policy.name.clone(),
                "mean".to_string(),
                format!("{:.1}", m.total_tasks),
                format!("{:.4}", m.budget),
                format!("{:.6}", m.kappa_pooled),
            ];
            row.extend(m.kappa_per_candidate.iter().map(|k| opt(*k)));
            row.push(format!("{:.6}", m.agreement));
            row.push(format!("{:.1}", m.tie_events));
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }

    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "crowdalloc experiment report");
        let _ = writeln!(
            out,
            "seed {}  runs {}  mode {}  price per task {}",
            self.seed,
            self.runs,
            self.mode.name(),
            self.price_per_task
        );
        let _ = writeln!(out, "corpus: {} ({} tweets)", self.source, self.tweets);
        let [ve, e, m, h] = self.class_counts;
        let _ = writeln!(
            out,
            "difficulty classes: very easy {ve}, easy {e}, medium {m}, hard {h} (sarcasm threshold {:.6})",
            self.threshold
        );
        out.push('\n');

        let means: Vec<(String, MeanMetrics)> = self.policies.iter().map(|p| (p.policy.name.clone(), p.mean())).collect();
        let base = self.baseline().map(|b| (b.policy.name.clone(), b.mean()));
        let width = means.iter().map(|(n, _)| n.len() + 2).max().unwrap_or(0).max(10);
        let row = |out: &mut String, label: &str, cells: Vec<String>| {
            let _ = write!(out, "{label:<18}");
            for c in cells {
                let _ = write!(out, "{c:>width$}");
            }
            out.push('\n');
        };

        let _ = writeln!(out, "Comparison of allocation policies (mean over {} runs)", self.runs);
        row(&mut out, "", means.iter().map(|(n, _)| n.clone()).collect());
        row(&mut out, "Tasks", means.iter().map(|(_, m)| format!("{:.1}", m.total_tasks)).collect());
        row(&mut out, "Budget", means.iter().map(|(_, m)| format!("{:.2}", m.budget)).collect());
        if let Some((bname, b)) = &base {
            row(
                &mut out,
                &format!("Saving vs {bname}"),
                means
                    .iter()
                    .map(|(_, m)| format!("{:.2}%", 100.0 * (1.0 - m.total_tasks / b.total_tasks)))
                    .collect(),
            );
        }
        row(&mut out, "Kappa", means.iter().map(|(_, m)| format!("{:.4}", m.kappa_pooled)).collect());
        if let Some((bname, b)) = &base {
            row(
                &mut out,
                &format!("Loss vs {bname} pp"),
                means
                    .iter()
                    .map(|(_, m)| format!("{:.2}", 100.0 * (b.kappa_pooled - m.kappa_pooled)))
                    .collect(),
            );
        }
        row(&mut out, "Agreement", means.iter().map(|(_, m)| format!("{:.2}%", 100.0 * m.agreement)).collect());
        row(&mut out, "Tie events", means.iter().map(|(_, m)| format!("{:.1}", m.tie_events)).collect());
        out.push('\n');

        let _ = writeln!(out, "Kappa per candidate");
        row(&mut out, "", means.iter().map(|(n, _)| n.clone()).collect());
        for c in Candidate::ALL {
            row(
                &mut out,
                c.name(),
                means
                    .iter()
                    .map(|(_, m)| m.kappa_per_candidate[c.index()].map_or("-".into(), |k| format!("{k:.4}")))
                    .collect(),
            );
        }
        out.push('\n');

        if let Some((label, table)) = self.crowd_distribution() {
            out.push_str(&table.render(&format!("Tweets by crowd majority label ({label})")));
            out.push('\n');
        }
        out.push_str(&self.expert_distribution.render("Tweets by gold label"));
        if let Some(d) = &self.durations {
            out.push('\n');
            out.push_str(&render_durations(d));
        }
        out
    }

    /// Writes every report file under `dir` and returns their paths.
    pub fn write_to(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir.join("outcomes"))?;
        let mut files = vec![
            (dir.join("runs.csv"), self.runs_csv()),
            (dir.join("summary.txt"), self.summary_text()),
            (dir.join("expert_distribution.csv"), self.expert_distribution.to_csv()),
        ];
        if let Some((_, table)) = self.crowd_distribution() {
            files.push((dir.join("crowd_distribution.csv"), table.to_csv()));
        }
        if let Some(d) = &self.durations {
            files.push((dir.join("durations.csv"), d.to_csv()));
        }
        for p in &self.policies {
            for r in &p.runs {
                let name = format!("{}-run{}.jsonl", sanitize(&p.policy.name), r.run);
                files.push((dir.join("outcomes").join(name), r.outcome.to_jsonl()));
            }
        }
        for (path, body) in &files {
            fs::write(path, body)?;
        }
        Ok(files.into_iter().map(|(p, _)| p).collect())
    }
}

pub fn render_durations(d: &DurationSummary) -> String {
    let mut out = String::from("Task durations (seconds)\n");
    let f = |v: Option<f64>| v.map_or("-".into(), |x| format!("{x:.1}"));
    let _ = writeln!(
        out,
        "count {}  mean {}  min {}  max {}  below range {}  above range {}",
        d.count,
        f(d.mean),
        f(d.min),
        f(d.max),
        d.below,
        d.above
    );
    for b in &d.buckets {
        let _ = writeln!(out, "{:>7.1} - {:>7.1}  {}", b.lo, b.hi, b.count);
    }
    out
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocation::{policy_table, PolicyKind};

    fn metrics(tasks: u64, kappa: f64) -> RunMetrics {
        RunMetrics {
            total_tasks: tasks,
            budget: crate::evaluation::budget(tasks, Money::from_micros(50_000)),
            kappa_pooled: kappa,
            kappa_per_candidate: [Some(kappa), None, None, None],
            agreement: 0.7,
            tie_events: 1,
            units: 10,
        }
    }

    fn result(kind: PolicyKind, runs: &[(u64, f64)]) -> PolicyResult {
        let policy = policy_table(kind);
        PolicyResult {
            runs: runs
                .iter()
                .enumerate()
                .map(|(i, &(t, k))| RunResult {
                    run: i as u32,
                    metrics: metrics(t, k),
                    outcome: AllocationOutcome {
                        policy: policy.name.clone(),
                        tweets: vec![],
                        total_tasks: t as usize,
                        tie_events: 1,
                    },
                })
                .collect(),
            policy,
        }
    }

    fn report() -> EvalReport {
        EvalReport {
            seed: 7,
            runs: 2,
            mode: Mode::Synthetic,
            price_per_task: Money::from_micros(50_000),
            source: "fixture".into(),
            tweets: 1000,
            class_counts: [300, 300, 250, 150],
            threshold: 0.5,
            policies: vec![
                result(PolicyKind::Trad(5), &[(5000, 0.65), (5000, 0.66)]),
                result(PolicyKind::Ddt1, &[(3200, 0.62), (3211, 0.63)]),
            ],
            expert_distribution: SentimentTable::default(),
            durations: None,
        }
    }

    #[test]
    fn runs_csv_shape() {
        let csv = report().runs_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], RUNS_CSV_HEADER.join(","));
        assert_eq!(lines.len(), 1 + 2 * 3);
        assert_eq!(lines[1], "trad5,0,5000,250.00,0.650000,0.650000,,,,0.700000,1");
        assert_eq!(lines[3], "trad5,mean,5000.0,250.0000,0.655000,0.655000,,,,0.700000,1.0");
        assert!(lines[6].starts_with("ddt1,mean,3205.5,160.2750,"));
    }

    #[test]
    fn summary_mentions_seed_and_baseline() {
        let text = report().summary_text();
        assert!(text.contains("seed 7"));
        assert!(text.contains("Saving vs trad5"));
        assert!(text.contains("35.89%"));
    }

    #[test]
    fn write_to_stays_in_dir() {
        let dir = tempfile::tempdir().unwrap();
        let files = report().write_to(dir.path()).unwrap();
        assert!(files.iter().all(|f| f.starts_with(dir.path())));
        assert!(dir.path().join("outcomes/ddt1-run1.jsonl").exists());
    }
}

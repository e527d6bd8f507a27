//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crowdalloc::allocation::{policy_table, PolicyKind};
use crowdalloc::analytics::{enumerate_scheme, expected_tasks, pm_dynamic, pm_fixed, savings_fraction, Scheme, TaskBasis};
use crowdalloc::corpus::Sentiment;
use crowdalloc::difficulty::DifficultyClass;
use crowdalloc::evaluation::{budget, cohens_kappa, Money};
use crowdalloc::sarcasm::{Feature, FeatureVector, SarcasmModel, FEATURE_COUNT};
use crowdalloc::simulation::{prepare, run_experiment, simulate_scheme, ErrorSplit, ExperimentConfig, Mode};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:?}, limit {limit:?}"))
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Majority of k independent binary votes, counted term by term.
fn fixed_oracle(k: u64, p: f64) -> f64 {
    (k / 2 + 1..=k)
        .map(|j| binomial(k, j) * p.powi(j as i32) * (1.0 - p).powi((k - j) as i32))
        .sum()
}

fn grid() -> Vec<f64> {
    (0..=100).map(|i| i as f64 / 100.0).collect()
}

fn c1_equivalence() -> Outcome {
    let start = Instant::now();
    let mut max_closed: f64 = 0.0;
    let mut max_enum: f64 = 0.0;
    for p in grid() {
        let fixed = pm_fixed(5, p).map_err(|e| e.to_string())?;
        let dynamic = pm_dynamic(3, 2, p).map_err(|e| e.to_string())?;
        let e_fixed = enumerate_scheme(Scheme::Fixed(5), p).map_err(|e| e.to_string())?.success;
        let e_dyn = enumerate_scheme(Scheme::Dynamic { initial: 3, extra: 2 }, p)
            .map_err(|e| e.to_string())?
            .success;
        max_closed = max_closed.max((fixed - dynamic).abs());
        max_enum = max_enum.max((fixed - e_fixed).abs()).max((dynamic - e_dyn).abs());
    }
    let elapsed = start.elapsed();
    ensure(max_closed <= 1e-12, || format!("closed forms differ by {max_closed:e}"))?;
    ensure(max_enum <= 1e-12, || format!("enumeration differs by {max_enum:e}"))?;
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!("max |fixed-dynamic| {max_closed:.1e}, max |closed-enum| {max_enum:.1e}, {elapsed:.2?}"))
}

fn scheme_of(kind: PolicyKind, class: DifficultyClass) -> Scheme {
    let rule = policy_table(kind).rule(class);
    if rule.second_round == 0 {
        Scheme::Fixed(rule.initial)
    } else {
        Scheme::Dynamic {
            initial: rule.initial,
            extra: rule.second_round,
        }
    }
}

fn c2_oracle_agreement() -> Outcome {
    let start = Instant::now();
    let mut schemes: Vec<Scheme> = [1, 3, 5, 7].map(Scheme::Fixed).to_vec();
    schemes.extend([(3, 2), (2, 1), (2, 3)].map(|(initial, extra)| Scheme::Dynamic { initial, extra }));
    schemes.push(scheme_of(PolicyKind::Ddt2, DifficultyClass::Medium));
    schemes.push(scheme_of(PolicyKind::Ddt2, DifficultyClass::Hard));
    let mut worst: f64 = 0.0;
    for &scheme in &schemes {
        for p in [0.3, 0.5, 0.7, 0.9] {
            let closed = match scheme {
                Scheme::Fixed(k) => pm_fixed(k, p),
                Scheme::Dynamic { initial, extra } => pm_dynamic(initial, extra, p),
            }
            .map_err(|e| e.to_string())?;
            let oracle = enumerate_scheme(scheme, p).map_err(|e| e.to_string())?.success;
            let diff = (closed - oracle).abs();
            ensure(diff <= 1e-12, || format!("{scheme} at p={p}: {closed} vs {oracle}"))?;
            worst = worst.max(diff);
        }
    }
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("{} schemes x 4 accuracies, max diff {worst:.1e}", schemes.len()))
}

fn c3_monte_carlo() -> Outcome {
    let start = Instant::now();
    let target = fixed_oracle(5, 0.7);
    ensure((target - 0.83692).abs() < 1e-12, || format!("oracle gives {target}"))?;
    let dynamic = simulate_scheme(Scheme::Dynamic { initial: 3, extra: 2 }, 0.7, ErrorSplit::SingleWrong, 1_000_000, 2016);
    let fixed = simulate_scheme(Scheme::Fixed(5), 0.7, ErrorSplit::SingleWrong, 1_000_000, 2016);
    let elapsed = start.elapsed();
    for (name, sim) in [("dyn3+2", dynamic), ("trad5", fixed)] {
        let acc = sim.accuracy();
        ensure((acc - target).abs() <= 0.002, || format!("{name} accuracy {acc:.5}"))?;
    }
    within(elapsed, Duration::from_secs(60))?;
    Ok(format!(
        "dyn3+2 {:.5}, trad5 {:.5} vs {target:.5}, {elapsed:.2?}",
        dynamic.accuracy(),
        fixed.accuracy()
    ))
}

fn c4_budget_arithmetic() -> Outcome {
    let tasks = expected_tasks(Scheme::Dynamic { initial: 3, extra: 2 }, TaskBasis::Unanimity(0.471), 1000)
        .map_err(|e| e.to_string())?;
    let saving = savings_fraction(tasks, 5000.0);
    ensure((tasks - 4058.0).abs() < 1e-9, || format!("tasks {tasks}"))?;
    ensure((saving - 0.1884).abs() < 1e-12, || format!("saving {saving}"))?;
    Ok(format!("{tasks} tasks, {:.2}% saving", saving * 100.0))
}

fn c5_task_counts() -> Outcome {
    let config = ExperimentConfig {
        mode: Mode::Replay,
        policies: ["trad1", "trad3", "trad5", "trad7", "trad9"].map(String::from).to_vec(),
        runs: 2,
        ..ExperimentConfig::default()
    };
    let prepared = prepare(&config).map_err(|e| e.to_string())?;
    let n = prepared.corpus.len() as u64;
    ensure(n == 1000, || format!("demo corpus has {n} tweets"))?;
    let report = run_experiment(&config, &prepared).map_err(|e| e.to_string())?;
    let mut seen = BTreeMap::new();
    for p in &report.policies {
        let PolicyKind::Trad(k) = p.policy.kind else {
            return Err(format!("unexpected policy {}", p.policy.name));
        };
        for r in &p.runs {
            ensure(r.metrics.total_tasks == k as u64 * n, || {
                format!("{} run {}: {} tasks", p.policy.name, r.run, r.metrics.total_tasks)
            })?;
        }
        seen.insert(p.policy.name.clone(), p.runs[0].metrics.total_tasks);
    }

    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/demo");
    let small = ExperimentConfig {
        mode: Mode::Replay,
        policies: ["trad1", "trad3", "trad5"].map(String::from).to_vec(),
        runs: 1,
        tweets: Some(fixture.join("tweets.jsonl")),
        labels: Some(fixture.join("labels.jsonl")),
        ..ExperimentConfig::default()
    };
    let prepared = prepare(&small).map_err(|e| e.to_string())?;
    let m = prepared.corpus.len() as u64;
    let report = run_experiment(&small, &prepared).map_err(|e| e.to_string())?;
    for (p, k) in report.policies.iter().zip([1, 3, 5]) {
        ensure(p.runs[0].metrics.total_tasks == k * m, || format!("fixture {}: {}", p.policy.name, p.runs[0].metrics.total_tasks))?;
    }
    Ok(format!("trad3 {}, trad5 {} on N = {n}; trad1..9 = k*N", seen["trad3"], seen["trad5"]))
}

fn c6_ordering() -> Outcome {
    let start = Instant::now();
    let config = ExperimentConfig {
        mode: Mode::Synthetic,
        runs: 5,
        ..ExperimentConfig::default()
    };
    let prepared = prepare(&config).map_err(|e| e.to_string())?;
    let report = run_experiment(&config, &prepared).map_err(|e| e.to_string())?;
    let mean = |name: &str| report.policy(name).map(|p| p.mean()).ok_or_else(|| format!("missing {name}"));
    let (t3, t5, sdt, d1, d2) = (mean("trad3")?, mean("trad5")?, mean("sdt")?, mean("ddt1")?, mean("ddt2")?);
    ensure(d1.total_tasks < d2.total_tasks && d2.total_tasks < 5000.0, || {
        format!("tasks ddt1 {} ddt2 {}", d1.total_tasks, d2.total_tasks)
    })?;
    ensure(t3.kappa_pooled <= t5.kappa_pooled + 0.01, || {
        format!("kappa trad3 {} trad5 {}", t3.kappa_pooled, t5.kappa_pooled)
    })?;
    for (name, m) in [("trad3", &t3), ("sdt", &sdt), ("ddt1", &d1)] {
        ensure(t5.kappa_pooled >= m.kappa_pooled - 0.01, || {
            format!("kappa {name} {} above trad5 {}", m.kappa_pooled, t5.kappa_pooled)
        })?;
    }
    ensure((d2.kappa_pooled - t5.kappa_pooled).abs() <= 0.03, || {
        format!("kappa ddt2 {} trad5 {}", d2.kappa_pooled, t5.kappa_pooled)
    })?;
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(120))?;
    Ok(format!(
        "tasks ddt1 {:.1} < ddt2 {:.1} < 5000; kappa trad3 {:.4} sdt {:.4} ddt1 {:.4} ddt2 {:.4} trad5 {:.4}; {elapsed:.2?}",
        d1.total_tasks, d2.total_tasks, t3.kappa_pooled, sdt.kappa_pooled, d1.kappa_pooled, d2.kappa_pooled, t5.kappa_pooled
    ))
}

fn c7_sarcasm() -> Outcome {
    let examples = vec![
        (FeatureVector::from_features(&[Feature::Quotes]), true),
        (FeatureVector::from_features(&[Feature::Laugh]), true),
        (FeatureVector::from_features(&[Feature::Quotes]), false),
        (FeatureVector::default(), false),
    ];
    let model = SarcasmModel::train(&examples).map_err(|e| e.to_string())?;
    let mut expected = [0.0; FEATURE_COUNT];
    expected[Feature::Quotes.index()] = 1.0 / 3.0;
    expected[Feature::Laugh.index()] = 2.0 / 3.0;
    ensure(model.weights == expected, || format!("weights {:?}", model.weights))?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..10_000 {
        let n = rng.random_range(1..20);
        let train: Vec<(FeatureVector, bool)> = (0..n)
            .map(|_| (FeatureVector(std::array::from_fn(|_| rng.random_bool(0.4))), rng.random_bool(0.5)))
            .collect();
        let model = SarcasmModel::train(&train).map_err(|e| e.to_string())?;
        let mut f = FeatureVector(std::array::from_fn(|_| rng.random_bool(0.4)));
        let before = model.score(&f);
        f.set(Feature::ALL[rng.random_range(0..FEATURE_COUNT)], true);
        let after = model.score(&f);
        ensure((0.0..=1.0).contains(&before) && (0.0..=1.0).contains(&after), || {
            format!("case {i}: score out of range {before} {after}")
        })?;
        ensure(after >= before, || format!("case {i}: {before} -> {after}"))?;
    }
    Ok("fixture weights 1/3, 2/3; 10000 random monotonicity checks".into())
}

/// Kappa straight from the counts table.
fn kappa_oracle(t: &[[u64; 3]; 3]) -> f64 {
    let n: u64 = t.iter().flatten().sum();
    let n = n as f64;
    let po = (0..3).map(|i| t[i][i] as f64).sum::<f64>() / n;
    let pe = (0..3)
        .map(|i| {
            let row: u64 = t[i].iter().sum();
            let col: u64 = (0..3).map(|j| t[j][i]).sum();
            row as f64 * col as f64
        })
        .sum::<f64>()
        / (n * n);
    if pe == 1.0 {
        1.0
    } else {
        (po - pe) / (1.0 - pe)
    }
}

fn expand(t: &[[u64; 3]; 3]) -> Vec<(Sentiment, Sentiment)> {
    let mut pairs = Vec::new();
    for (g, row) in t.iter().enumerate() {
        for (p, &count) in row.iter().enumerate() {
            pairs.extend(std::iter::repeat_n((Sentiment::ALL[g], Sentiment::ALL[p]), count as usize));
        }
    }
    pairs
}

fn c8_kappa() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let mut t = [[0u64; 3]; 3];
        for cell in t.iter_mut().flatten() {
            *cell = rng.random_range(0..40);
        }
        t[0][0] += 1;
        let k = cohens_kappa(&expand(&t)).map_err(|e| e.to_string())?;
        worst = worst.max((k - kappa_oracle(&t)).abs());
    }
    ensure(worst <= 1e-12, || format!("max diff {worst:e}"))?;
    let fixture = [[20, 0, 10], [0, 0, 0], [10, 0, 20]];
    let k = cohens_kappa(&expand(&fixture)).map_err(|e| e.to_string())?;
    ensure(k == 1.0 / 3.0, || format!("fixture kappa {k}"))?;
    Ok(format!("100 tables max diff {worst:.1e}; fixture kappa {k}"))
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).expect("readable output dir") {
            let path = entry.expect("dir entry").path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).expect("inside dir").display().to_string();
                files.insert(rel, std::fs::read(&path).expect("readable file"));
            }
        }
    }
    files
}

fn c9_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_crowdalloc");
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut checked = 0;
    for sub in ["simulate", "replay"] {
        let mut outputs = Vec::new();
        for (i, threads) in ["1", "1", "8"].iter().enumerate() {
            let out = tmp.path().join(format!("{sub}-{i}"));
            let status = Command::new(bin)
                .args([sub, "--seed", "7", "--runs", "2", "--threads", threads, "--out"])
                .arg(&out)
                .output()
                .map_err(|e| e.to_string())?;
            ensure(status.status.success(), || {
                format!("{sub} failed: {}", String::from_utf8_lossy(&status.stderr))
            })?;
            outputs.push(read_tree(&out));
        }
        ensure(!outputs[0].is_empty(), || format!("{sub} wrote nothing"))?;
        for (i, other) in outputs.iter().enumerate().skip(1) {
            ensure(&outputs[0] == other, || {
                let differing: Vec<&String> = outputs[0]
                    .iter()
                    .filter(|(k, v)| other.get(*k) != Some(v))
                    .map(|(k, _)| k)
                    .collect();
                format!("{sub} invocation {i} differs in {differing:?}")
            })?;
        }
        checked += outputs[0].len();
    }
    Ok(format!("{checked} report files identical across repeat runs and 1 vs 8 threads"))
}

fn c10_cost() -> Outcome {
    let price: Money = "0.05".parse().map_err(|e: crowdalloc::evaluation::EvalError| e.to_string())?;
    let b = budget(5075, price);
    ensure(b == Money::from_micros(253_750_000), || format!("budget {b}"))?;
    ensure(b.to_string() == "253.75", || format!("rendered {b}"))?;
    Ok(format!("5075 x {price} = {b}"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("equivalence of trad5 and dyn3+2", c1_equivalence),
        ("closed forms match enumeration", c2_oracle_agreement),
        ("Monte Carlo matches closed form", c3_monte_carlo),
        ("expected-task arithmetic", c4_budget_arithmetic),
        ("fixed-k replay task counts", c5_task_counts),
        ("policy ordering on synthetic corpus", c6_ordering),
        ("sarcasm model fixture and monotonicity", c7_sarcasm),
        ("Cohen's kappa oracle", c8_kappa),
        ("CLI determinism", c9_determinism),
        ("budget accounting", c10_cost),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(detail) => println!("PASS  {:>2}. {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {:>2}. {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

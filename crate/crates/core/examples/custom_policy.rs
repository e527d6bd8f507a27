//! Defines an allocation policy in JSON and compares it with DDT2 on a
//! synthetic experiment.

use crowdalloc::allocation::AllocationPolicy;
use crowdalloc::simulation::{prepare, run_experiment, ExperimentConfig};

const POLICY: &str = r#"{
  "name": "lean",
  "table": {
    "very_easy": {"initial": 1},
    "easy":      {"initial": 2, "second_round": 1, "trigger": "not_unanimous"},
    "medium":    {"initial": 3, "second_round": 2, "trigger": "not_unanimous"},
    "hard":      {"initial": 5}
  }
}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let policy = AllocationPolicy::from_json(POLICY)?;
    let dir = std::env::temp_dir().join("crowdalloc-custom-policy");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("lean.json");
    std::fs::write(&path, policy.to_json())?;

    let config = ExperimentConfig {
        policies: vec!["ddt2".into(), path.display().to_string()],
        runs: 3,
        demo_tweets: 500,
        ..ExperimentConfig::default()
    };
    let prepared = prepare(&config)?;
    let report = run_experiment(&config, &prepared)?;
    for p in &report.policies {
        let m = p.mean();
        println!("{:<6} tasks {:>7.1}  kappa {:.4}", p.policy.name, m.total_tasks, m.kappa_pooled);
    }
    Ok(())
}

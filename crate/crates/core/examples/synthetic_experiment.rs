//! Runs the built-in policies against synthetic workers whose accuracy
//! drops with tweet difficulty.

use crowdalloc::simulation::{prepare, run_experiment, ClassAccuracy, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = ExperimentConfig {
        accuracy: ClassAccuracy {
            very_easy: 0.95,
            easy: 0.85,
            medium: 0.7,
            hard: 0.55,
        },
        ..ExperimentConfig::default()
    };
    let prepared = prepare(&config)?;
    let report = run_experiment(&config, &prepared)?;
    print!("{}", report.runs_csv());
    Ok(())
}

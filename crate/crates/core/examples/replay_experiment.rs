//! Replays recorded label pools under every built-in policy and prints the
//! comparison report. Pass a directory to also write the report files.
//!
//!     cargo run --example replay_experiment -- [OUT_DIR]

use crowdalloc::simulation::{prepare, run_experiment, ExperimentConfig, Mode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = ExperimentConfig {
        mode: Mode::Replay,
        ..ExperimentConfig::default()
    };
    let prepared = prepare(&config)?;
    let report = run_experiment(&config, &prepared)?;
    print!("{}", report.summary_text());
    if let Some(dir) = std::env::args().nth(1) {
        for path in report.write_to(std::path::Path::new(&dir))? {
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

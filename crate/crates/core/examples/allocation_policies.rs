//! Prints the built-in allocation tables and runs each policy over a small
//! synthetic workload.

use crowdalloc::allocation::{policy_table, run_policy, PolicyKind, WorkItem};
use crowdalloc::difficulty::DifficultyClass;
use crowdalloc::rng::RunSeed;
use crowdalloc::simulation::demo::{generate, DemoSpec};
use crowdalloc::simulation::{SyntheticSource, SyntheticWorkerModel};
use crowdalloc::DifficultyPipeline;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let kinds = [PolicyKind::Trad(3), PolicyKind::Trad(5), PolicyKind::Sdt, PolicyKind::Ddt1, PolicyKind::Ddt2];
    println!("{:<6} {:>10} {:>10} {:>10} {:>10}", "", "very easy", "easy", "medium", "hard");
    for kind in kinds {
        let p = policy_table(kind);
        let cells: Vec<String> = DifficultyClass::ALL
            .iter()
            .map(|&c| {
                let r = p.rule(c);
                if r.second_round > 0 {
                    format!("{}+{}", r.initial, r.second_round)
                } else {
                    r.initial.to_string()
                }
            })
            .collect();
        println!("{:<6} {:>10} {:>10} {:>10} {:>10}", p.name, cells[0], cells[1], cells[2], cells[3]);
    }

    let corpus = generate(&DemoSpec {
        tweets: 200,
        ..DemoSpec::default()
    })?;
    let pipeline = DifficultyPipeline::fit(corpus.tweets(), Default::default(), Default::default())?;
    let classes = pipeline.classify_all(corpus.tweets())?;
    let items: Vec<WorkItem> = corpus
        .tweets()
        .iter()
        .zip(&classes)
        .map(|(tweet, &class)| WorkItem { tweet, class })
        .collect();
    let source = SyntheticSource {
        model: SyntheticWorkerModel::default(),
    };

    println!();
    for kind in kinds {
        let policy = policy_table(kind);
        let outcome = run_policy(&policy, &items, &source, RunSeed::new(1, 0))?;
        println!(
            "{:<6} {:>5} tasks  {:>3} second rounds  {:>3} tie-breaks",
            policy.name,
            outcome.total_tasks,
            outcome.second_rounds(),
            outcome.tie_events
        );
    }
    Ok(())
}

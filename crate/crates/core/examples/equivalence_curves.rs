//! Majority-vote success probability for fixed and two-round schemes,
//! checked against exhaustive enumeration.

use crowdalloc::analytics::{enumerate_scheme, expected_tasks, pm, savings_fraction, Scheme, TaskBasis};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let trad5 = Scheme::Fixed(5);
    let dynamic = Scheme::Dynamic { initial: 3, extra: 2 };
    println!("{:>5} {:>10} {:>10} {:>12} {:>10}", "p", "trad3", "trad5", "dyn3+2", "tasks");
    for i in 0..=10 {
        let p = i as f64 / 10.0;
        println!(
            "{p:>5.1} {:>10.6} {:>10.6} {:>12.6} {:>10.4}",
            pm(Scheme::Fixed(3), p)?,
            pm(trad5, p)?,
            enumerate_scheme(dynamic, p)?.success,
            expected_tasks(dynamic, TaskBasis::Accuracy(p), 1)?
        );
    }

    let tasks = expected_tasks(dynamic, TaskBasis::Unanimity(0.471), 1000)?;
    println!(
        "\n1000 tweets at 47.1% first-round unanimity: {tasks:.0} tasks, {:.2}% fewer than trad5",
        100.0 * savings_fraction(tasks, 5000.0)
    );
    Ok(())
}

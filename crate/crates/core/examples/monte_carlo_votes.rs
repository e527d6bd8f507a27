//! Monte Carlo check of majority-vote accuracy against the closed form.

use crowdalloc::analytics::{pm, Scheme};
use crowdalloc::simulation::{simulate_scheme, ErrorSplit};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = 0.7;
    for scheme in [Scheme::Fixed(3), Scheme::Fixed(5), Scheme::Dynamic { initial: 3, extra: 2 }] {
        let binary = simulate_scheme(scheme, p, ErrorSplit::SingleWrong, 200_000, 42);
        let three_way = simulate_scheme(scheme, p, ErrorSplit::Uniform, 200_000, 42);
        println!(
            "{:<8} closed form {:.5}  binary sim {:.5}  three-way sim {:.5}  tasks/item {:.3}",
            scheme.to_string(),
            pm(scheme, p)?,
            binary.accuracy(),
            three_way.accuracy(),
            binary.tasks_per_item()
        );
    }
    Ok(())
}

//! Exact budget arithmetic for a task count and a per-task price.

use crowdalloc::evaluation::{budget, Money};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let price: Money = "0.05".parse()?;
    for (label, tasks) in [("trad3", 3000), ("trad5", 5000), ("observed", 5075)] {
        println!("{label:<9} {tasks:>5} tasks x {price} = {}", budget(tasks, price));
    }
    let odd: Money = "0.0125".parse()?;
    println!("{:>15} tasks x {odd} = {}", 333, budget(333, odd));
    Ok(())
}

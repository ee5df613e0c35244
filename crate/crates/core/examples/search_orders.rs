//! Compare order-search strategies on a near-homogeneous path and a skewed one.
//!
//! ```text
//! cargo run -p qswap --example search_orders
//! ```

use qswap::order_search::greedy_swap_traced;
use qswap::{EvalMode, PathSpec, Strategy};

fn main() -> qswap::Result<()> {
    let cases = [
        ("near-homogeneous", PathSpec::uniform(&[100, 101, 101, 100], 0.2, 0.5)?),
        ("increasing", PathSpec::uniform(&[100, 200, 300, 400], 0.2, 0.5)?),
        ("bottleneck", PathSpec::uniform(&[300, 40, 300, 300, 60, 300], 0.3, 0.6)?),
    ];
    let strategies = [
        Strategy::BruteForce,
        Strategy::Vora,
        Strategy::Greedy,
        Strategy::Balanced,
        Strategy::LeftToRight,
        Strategy::RightToLeft,
    ];
    for (name, path) in &cases {
        println!("{name}:");
        for s in strategies {
            let found = s.run(path, EvalMode::Exact)?;
            println!("  {:<9} {found}", s.name());
        }
        let trace = greedy_swap_traced(path, EvalMode::Exact)?;
        println!("  greedy used {} swap evaluations\n", trace.swap_calls);
    }
    Ok(())
}

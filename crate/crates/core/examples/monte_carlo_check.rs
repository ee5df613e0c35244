//! Check analytic scores against the seeded sampler.
//!
//! ```text
//! cargo run -p qswap --example monte_carlo_check --release
//! ```

use qswap::montecarlo::{simulate_asap, simulate_order};
use qswap::order_search::score_all_trees;
use qswap::{EvalMode, PathSpec};

fn main() -> qswap::Result<()> {
    let path = PathSpec::uniform(&[100, 200, 300, 400], 0.2, 0.5)?;
    let trials = 200_000;
    println!("{:<10} {:>8} {:>16} {:>7}", "order", "exact", "sampled", "z");
    for scored in score_all_trees(&path, EvalMode::Exact, 100)? {
        let sim = simulate_order(&path, &scored.order, trials, 2024)?;
        println!(
            "{:<10} {:>8.4} {:>9.4} ± {:.4} {:>7.2}",
            scored.order.to_string(),
            scored.score,
            sim.mean,
            sim.standard_error(),
            sim.z_score(scored.score)
        );
    }
    let asap = simulate_asap(&path, trials, 2024)?;
    println!("\nrandom interleaving: {:.4} ± {:.4}", asap.mean, asap.standard_error());
    Ok(())
}

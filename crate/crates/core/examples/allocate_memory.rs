//! Split node memories between links and choose the order jointly.
//!
//! ```text
//! cargo run -p qswap --example allocate_memory
//! ```

use qswap::allocation::{
    enumerate_allocations, optimize_allocation, AllocationOptions, AllocationProblem, CapacityModel, MemoryBudget,
};
use qswap::EvalMode;

fn main() -> qswap::Result<()> {
    let budget = MemoryBudget::new(vec![4, 6, 6, 6, 4])?;
    println!("maximal allocations for nodes {:?}:", budget.per_node());
    for alloc in enumerate_allocations(&budget)? {
        print!(" {alloc}");
    }
    println!();

    // The second link is long and lossy, so each memory pair buys less there.
    let problem = AllocationProblem {
        budget,
        model: CapacityModel::linear(vec![8.0, 8.0, 8.0, 8.0])?,
        link_probs: vec![0.4, 0.1, 0.4, 0.4],
        swap_probs: vec![0.5, 0.5, 0.5],
    };
    let outcome = optimize_allocation(&problem, EvalMode::Exact, &AllocationOptions::default())?;

    let mut ranked = outcome.evaluated.clone();
    ranked.sort_by(|a, b| b.order.score.total_cmp(&a.order.score));
    println!("\ntop candidates:");
    for c in ranked.iter().take(5) {
        println!("  {:<12} order {:<10} score {:.4}", c.allocation.to_string(), c.order.order.to_string(), c.order.score);
    }
    println!("\nbest: {} with {}", outcome.best.allocation, outcome.best.order);
    Ok(())
}

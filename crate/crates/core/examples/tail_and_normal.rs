//! Exact, tail-truncated, normal and hybrid evaluation side by side.
//!
//! ```text
//! cargo run -p qswap --example tail_and_normal --release
//! ```

use std::time::Instant;

use qswap::order_search::balanced_tree;
use qswap::{ent, EvalMode, PathSpec};

fn main() -> qswap::Result<()> {
    let path = PathSpec::uniform(&[1000, 2000, 3000, 4000, 2500, 1500], 0.2, 0.5)?;
    let order = balanced_tree(&path);
    println!("path capacities 1000..4000, order {order}\n");

    let modes = [
        EvalMode::Exact,
        EvalMode::Tail { epsilon: 1e-5 },
        EvalMode::Tail { epsilon: 1e-3 },
        EvalMode::Normal,
        EvalMode::Hybrid { epsilon: 1e-5 },
    ];
    let exact = ent(&path, &order, EvalMode::Exact)?.score;
    for mode in modes {
        let start = Instant::now();
        let score = ent(&path, &order, mode)?.score;
        let label = match mode {
            EvalMode::Tail { epsilon } | EvalMode::Hybrid { epsilon } => format!("{} eps={epsilon:e}", mode.name()),
            _ => mode.name().to_string(),
        };
        println!(
            "{label:<18} score {score:>10.5}  rel. gap {:>9.2e}  {:>10.3?}",
            (score - exact).abs() / exact,
            start.elapsed()
        );
    }

    // Normal mode does not care how large the capacities are.
    let huge = PathSpec::uniform(&[1_000_000; 8], 0.3, 0.5)?;
    let start = Instant::now();
    let score = ent(&huge, &balanced_tree(&huge), EvalMode::Normal)?.score;
    println!("\n8 links of capacity 1e6, normal mode: {score:.1} in {:?}", start.elapsed());
    Ok(())
}

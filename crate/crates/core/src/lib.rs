//! Expected entanglement throughput of quantum-repeater paths.
//!
//! A path is a chain of links, each generating up to `capacity` pairs per
//! slot with some success probability; interior nodes swap with their own
//! success probability. [`swap_engine`] scores a swapping order, exactly or
//! approximately; [`order_search`] looks for a good order; [`allocation`]
//! splits node memories between links; [`estimator`] maps physical hardware
//! to slot parameters; [`montecarlo`] samples the model as an oracle.

pub mod allocation;
pub mod cli;
pub mod distributions;
pub mod error;
pub mod estimator;
pub mod montecarlo;
pub mod order_search;
pub mod swap_engine;

pub use error::{Error, Result};
pub use order_search::{brute_force, greedy_swap, vora_swap, ScoredOrder, Strategy};
pub use swap_engine::{ent, EvalMode, LinkSpec, PathSpec, SwapOrder};

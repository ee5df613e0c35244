//! Joint choice of per-link memory allocation and swapping order.
//!
//! Node `i` holds `Q_i` memories. Link `(i, i+1)` gets `m_i >= 1` memory
//! pairs, each using one memory at both ends, so an interior node must satisfy
//! `m_{i-1} + m_i <= Q_i` and the end nodes `m_0 <= Q_0`, `m_{n-1} <= Q_n`.
//! Throughput grows with capacity and capacity with `m_i`, so only maximal
//! allocations (no single `m_i` can grow) are candidates.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::order_search::{self, tied, ScoredOrder};
use crate::swap_engine::{EvalMode, LinkSpec, PathSpec};

/// Default cap on the number of maximal allocations scored exhaustively.
pub const DEFAULT_ALLOCATION_BUDGET: usize = 100_000;

/// Upper bound on improvement rounds of the local search fallback.
const MAX_ASCENT_ROUNDS: usize = 10_000;

/// Memories available at each node `0..=n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryBudget {
    per_node: Vec<u32>,
}

impl MemoryBudget {
    pub fn new(per_node: Vec<u32>) -> Result<Self> {
        if per_node.len() < 2 {
            return Err(Error::InvalidParameter("a memory budget covers at least two nodes".into()));
        }
        if let Some(i) = per_node.iter().position(|&q| q == 0) {
            return Err(Error::InvalidParameter(format!("node {i} has no memory")));
        }
        Ok(Self { per_node })
    }

    pub fn per_node(&self) -> &[u32] {
        &self.per_node
    }

    pub fn link_count(&self) -> usize {
        self.per_node.len() - 1
    }

    /// Whether `alloc` respects every node budget and gives each link a pair.
    pub fn admits(&self, alloc: &Allocation) -> bool {
        let (q, m) = (&self.per_node, alloc.per_link());
        let n = self.link_count();
        m.len() == n
            && m.iter().all(|&x| x >= 1)
            && m[0] <= q[0]
            && m[n - 1] <= q[n]
            && (1..n).all(|i| m[i - 1] + m[i] <= q[i])
    }

    /// Whether `alloc` is admissible and no single link can take another pair.
    pub fn is_maximal(&self, alloc: &Allocation) -> bool {
        self.admits(alloc)
            && (0..self.link_count()).all(|i| {
                let mut bumped = alloc.clone();
                bumped.0[i] += 1;
                !self.admits(&bumped)
            })
    }

    fn check_feasible(&self) -> Result<()> {
        let n = self.link_count();
        if let Some(i) = (1..n).find(|&i| self.per_node[i] < 2) {
            return Err(Error::Infeasible(format!(
                "interior node {i} has {} memory but must serve two links",
                self.per_node[i]
            )));
        }
        Ok(())
    }
}

/// Memory pairs per link.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Allocation(Vec<u32>);

impl Allocation {
    pub fn new(per_link: Vec<u32>) -> Self {
        Self(per_link)
    }

    pub fn per_link(&self) -> &[u32] {
        &self.0
    }
}

impl fmt::Display for Allocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

/// Maps memory pairs to link capacity.
#[derive(Debug, Clone, PartialEq)]
pub enum CapacityModel {
    /// `c_i = max(1, round(kappa_i * m_i))`.
    Linear { kappa: Vec<f64> },
}

impl CapacityModel {
    pub fn linear(kappa: Vec<f64>) -> Result<Self> {
        if let Some(k) = kappa.iter().find(|k| !(**k > 0.0) || !k.is_finite()) {
            return Err(Error::InvalidParameter(format!("capacity slope {k} must be positive")));
        }
        Ok(CapacityModel::Linear { kappa })
    }

    pub fn capacities(&self, alloc: &Allocation) -> Vec<u64> {
        match self {
            CapacityModel::Linear { kappa } => alloc
                .per_link()
                .iter()
                .zip(kappa)
                .map(|(&m, &k)| ((k * m as f64).round() as u64).max(1))
                .collect(),
        }
    }

    fn link_count(&self) -> usize {
        match self {
            CapacityModel::Linear { kappa } => kappa.len(),
        }
    }
}

/// Lazy depth-first walk over the maximal allocations, in lexicographic order.
///
/// A link that is not tight at its left node must be tight at its right node,
/// which fixes the next link's share; that forcing keeps the walk on maximal
/// points only.
pub struct MaximalAllocations {
    q: Vec<i64>,
    m: Vec<i64>,
    hi: Vec<i64>,
    depth: usize,
    exhausted: bool,
}

impl MaximalAllocations {
    fn new(budget: &MemoryBudget) -> Self {
        let n = budget.link_count();
        Self {
            q: budget.per_node.iter().map(|&x| x as i64).collect(),
            m: vec![0; n],
            hi: vec![0; n],
            depth: 0,
            exhausted: false,
        }
    }

    fn n(&self) -> usize {
        self.m.len()
    }

    fn left_cap(&self, i: usize) -> i64 {
        if i == 0 {
            self.q[0]
        } else {
            self.q[i] - self.m[i - 1]
        }
    }

    fn right_cap(&self, i: usize) -> i64 {
        if i + 1 == self.n() {
            self.q[i + 1]
        } else {
            self.q[i + 1] - 1
        }
    }

    fn left_tight(&self, i: usize) -> bool {
        self.m[i] == self.left_cap(i)
    }

    /// Candidate range for link `depth` given the links already placed.
    fn range(&self, i: usize) -> Option<(i64, i64)> {
        let (lc, rc) = (self.left_cap(i), self.right_cap(i));
        if i > 0 && !self.left_tight(i - 1) {
            return (lc >= 1 && lc <= rc).then_some((lc, lc));
        }
        let hi = lc.min(rc);
        (hi >= 1).then_some((1, hi))
    }

    /// Moves to the next sibling at the deepest level that has one.
    fn advance(&mut self) -> bool {
        while self.depth > 0 {
            let i = self.depth - 1;
            if self.m[i] < self.hi[i] {
                self.m[i] += 1;
                return true;
            }
            self.depth -= 1;
        }
        false
    }
}

impl Iterator for MaximalAllocations {
    type Item = Allocation;

    fn next(&mut self) -> Option<Allocation> {
        if self.exhausted {
            return None;
        }
        let n = self.n();
        // A full vector from the previous call must be advanced first.
        if self.depth == n && !self.advance() {
            self.exhausted = true;
            return None;
        }
        loop {
            if self.depth < n {
                match self.range(self.depth) {
                    Some((lo, hi)) => {
                        self.m[self.depth] = lo;
                        self.hi[self.depth] = hi;
                        self.depth += 1;
                    }
                    None => {
                        if !self.advance() {
                            self.exhausted = true;
                            return None;
                        }
                    }
                }
                continue;
            }
            let last = n - 1;
            if self.left_tight(last) || self.m[last] == self.q[n] {
                return Some(Allocation(self.m.iter().map(|&x| x as u32).collect()));
            }
            if !self.advance() {
                self.exhausted = true;
                return None;
            }
        }
    }
}

/// All maximal allocations under `budget`.
pub fn enumerate_allocations(budget: &MemoryBudget) -> Result<MaximalAllocations> {
    budget.check_feasible()?;
    Ok(MaximalAllocations::new(budget))
}

/// How the order is chosen for each candidate allocation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrderSearch {
    Vora,
    BruteForce,
    /// Brute force while the tree count is at most `max_trees`, VoraSwap beyond.
    Auto { max_trees: u128 },
}

impl OrderSearch {
    pub fn run(&self, path: &PathSpec, mode: EvalMode) -> Result<ScoredOrder> {
        match *self {
            OrderSearch::Vora => order_search::vora_swap(path, mode),
            OrderSearch::BruteForce => order_search::brute_force(path, mode),
            OrderSearch::Auto { max_trees } => {
                if order_search::tree_count(path.link_count()).is_some_and(|c| c <= max_trees) {
                    order_search::brute_force(path, mode)
                } else {
                    order_search::vora_swap(path, mode)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationOptions {
    pub max_allocations: usize,
    pub order_search: OrderSearch,
}

impl Default for AllocationOptions {
    fn default() -> Self {
        Self { max_allocations: DEFAULT_ALLOCATION_BUDGET, order_search: OrderSearch::Auto { max_trees: 132 } }
    }
}

/// The inputs of the allocation problem besides the budget.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationProblem {
    pub budget: MemoryBudget,
    pub model: CapacityModel,
    pub link_probs: Vec<f64>,
    pub swap_probs: Vec<f64>,
}

impl AllocationProblem {
    /// The path obtained by giving each link its share of `alloc`.
    pub fn path_for(&self, alloc: &Allocation) -> Result<PathSpec> {
        let links = self
            .model
            .capacities(alloc)
            .into_iter()
            .zip(&self.link_probs)
            .map(|(capacity, &success)| LinkSpec { capacity, success })
            .collect();
        PathSpec::new(links, self.swap_probs.clone())
    }

    pub fn score(&self, alloc: &Allocation, mode: EvalMode, search: OrderSearch) -> Result<ScoredOrder> {
        search.run(&self.path_for(alloc)?, mode)
    }

    fn check(&self) -> Result<()> {
        let n = self.budget.link_count();
        if self.model.link_count() != n || self.link_probs.len() != n || self.swap_probs.len() + 1 != n {
            return Err(Error::InvalidParameter(format!(
                "budget covers {n} links but the model, link and swap probabilities disagree"
            )));
        }
        self.budget.check_feasible()
    }
}

/// One scored candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredAllocation {
    pub allocation: Allocation,
    pub order: ScoredOrder,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationOutcome {
    pub best: ScoredAllocation,
    /// Every candidate scored, in the order visited.
    pub evaluated: Vec<ScoredAllocation>,
    /// True when the candidate count exceeded the budget and local search was used.
    pub heuristic: bool,
}

fn pick_best(candidates: &[ScoredAllocation]) -> &ScoredAllocation {
    let mut best = &candidates[0];
    for cand in &candidates[1..] {
        let (s, b) = (cand.order.score, best.order.score);
        if (tied(s, b) && cand.allocation < best.allocation) || (!tied(s, b) && s > b) {
            best = cand;
        }
    }
    best
}

/// Maximizes throughput over maximal allocations and swapping orders.
pub fn optimize_allocation(
    problem: &AllocationProblem,
    mode: EvalMode,
    options: &AllocationOptions,
) -> Result<AllocationOutcome> {
    problem.check()?;
    mode.validate()?;
    let candidates: Vec<Allocation> =
        enumerate_allocations(&problem.budget)?.take(options.max_allocations.saturating_add(1)).collect();
    if candidates.len() > options.max_allocations {
        return coordinate_ascent(problem, mode, options.order_search);
    }
    let evaluated = candidates
        .into_par_iter()
        .map(|allocation| {
            let order = problem.score(&allocation, mode, options.order_search)?;
            Ok(ScoredAllocation { allocation, order })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = pick_best(&evaluated).clone();
    Ok(AllocationOutcome { best, evaluated, heuristic: false })
}

/// Even split of every interior node between its two links, ends take all.
pub fn balanced_allocation(budget: &MemoryBudget) -> Allocation {
    let (q, n) = (budget.per_node(), budget.link_count());
    let share = |node: usize| if node == 0 || node == n { q[node] } else { q[node] / 2 };
    Allocation((0..n).map(|i| share(i).min(share(i + 1)).max(1)).collect())
}

fn neighbours(budget: &MemoryBudget, alloc: &Allocation) -> Vec<Allocation> {
    let n = budget.link_count();
    let mut out = Vec::new();
    let mut push = |m: Vec<u32>| {
        let cand = Allocation(m);
        if budget.admits(&cand) {
            out.push(cand);
        }
    };
    for i in 0..n {
        let mut up = alloc.0.clone();
        up[i] += 1;
        push(up);
        if i + 1 < n {
            let mut right = alloc.0.clone();
            if right[i + 1] > 1 {
                right[i] += 1;
                right[i + 1] -= 1;
                push(right);
            }
            let mut left = alloc.0.clone();
            if left[i] > 1 {
                left[i] -= 1;
                left[i + 1] += 1;
                push(left);
            }
        }
    }
    out
}

/// Best-improvement local search from the balanced allocation.
fn coordinate_ascent(problem: &AllocationProblem, mode: EvalMode, search: OrderSearch) -> Result<AllocationOutcome> {
    let mut current = ScoredAllocation {
        allocation: balanced_allocation(&problem.budget),
        order: problem.score(&balanced_allocation(&problem.budget), mode, search)?,
    };
    let mut evaluated = vec![current.clone()];
    for _ in 0..MAX_ASCENT_ROUNDS {
        let scored = neighbours(&problem.budget, &current.allocation)
            .into_par_iter()
            .map(|allocation| {
                let order = problem.score(&allocation, mode, search)?;
                Ok(ScoredAllocation { allocation, order })
            })
            .collect::<Result<Vec<_>>>()?;
        evaluated.extend(scored.iter().cloned());
        let improving: Vec<ScoredAllocation> = scored
            .into_iter()
            .filter(|c| c.order.score > current.order.score && !tied(c.order.score, current.order.score))
            .collect();
        if improving.is_empty() {
            break;
        }
        current = pick_best(&improving).clone();
    }
    Ok(AllocationOutcome { best: current, evaluated, heuristic: true })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn budget(q: &[u32]) -> MemoryBudget {
        MemoryBudget::new(q.to_vec()).unwrap()
    }

    fn all(q: &[u32]) -> Vec<Vec<u32>> {
        enumerate_allocations(&budget(q)).unwrap().map(|a| a.0).collect()
    }

    /// Every admissible vector by nested counting, filtered to maximal ones.
    fn maximal_by_scan(q: &[u32]) -> Vec<Vec<u32>> {
        let b = budget(q);
        let n = b.link_count();
        let top = *q.iter().max().unwrap();
        let mut out = Vec::new();
        let mut m = vec![1u32; n];
        loop {
            let a = Allocation(m.clone());
            if b.is_maximal(&a) {
                out.push(m.clone());
            }
            let mut i = n;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                if m[i] < top {
                    m[i] += 1;
                    break;
                }
                m[i] = 1;
            }
        }
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(all(&[6, 6, 6]), vec![vec![1, 5], vec![2, 4], vec![3, 3], vec![4, 2], vec![5, 1]]);
        assert_eq!(all(&[3, 5]), vec![vec![3]]);
        assert_eq!(all(&[1, 2, 1]), vec![vec![1, 1]]);
    }

    #[test]
    fn enumeration_matches_scan() {
        let cases: &[&[u32]] = &[
            &[2, 3, 2],
            &[6, 6, 6, 6],
            &[2, 6, 3, 5, 4],
            &[1, 4, 4, 1],
            &[5, 2, 7, 2, 5],
            &[3, 3, 3, 3, 3, 3],
            &[9, 4],
        ];
        for q in cases {
            assert_eq!(all(q), maximal_by_scan(q), "{q:?}");
        }
    }

    #[test]
    fn infeasible_budgets() {
        assert!(matches!(enumerate_allocations(&budget(&[4, 1, 4])), Err(Error::Infeasible(_))));
        assert!(MemoryBudget::new(vec![3]).is_err());
        assert!(MemoryBudget::new(vec![3, 0]).is_err());
    }

    #[test]
    fn linear_capacity_rounding() {
        let model = CapacityModel::linear(vec![0.3, 2.5]).unwrap();
        assert_eq!(model.capacities(&Allocation(vec![1, 3])), vec![1, 8]);
        assert!(CapacityModel::linear(vec![0.0]).is_err());
    }

    fn problem(q: &[u32], kappa: &[f64], probs: &[f64], swaps: &[f64]) -> AllocationProblem {
        AllocationProblem {
            budget: budget(q),
            model: CapacityModel::linear(kappa.to_vec()).unwrap(),
            link_probs: probs.to_vec(),
            swap_probs: swaps.to_vec(),
        }
    }

    #[test]
    fn symmetric_instance_splits_evenly() {
        let p = problem(&[6, 6, 6], &[10.0, 10.0], &[0.3, 0.3], &[0.5]);
        let out = optimize_allocation(&p, EvalMode::Exact, &AllocationOptions::default()).unwrap();
        assert_eq!(out.best.allocation, Allocation(vec![3, 3]));
        assert_eq!(out.evaluated.len(), 5);
        assert!(!out.heuristic);
    }

    #[test]
    fn weak_link_gets_more_memory() {
        let p = problem(&[6, 6, 6], &[10.0, 10.0], &[0.05, 0.4], &[0.5]);
        let out = optimize_allocation(&p, EvalMode::Exact, &AllocationOptions::default()).unwrap();
        let best = out.evaluated.iter().map(|c| c.order.score).fold(f64::MIN, f64::max);
        assert_eq!(out.best.order.score, best);
        assert!(out.best.allocation.0[0] > out.best.allocation.0[1]);
    }

    #[test]
    fn falls_back_to_local_search_over_budget() {
        let p = problem(&[6, 6, 6, 6], &[4.0, 4.0, 4.0], &[0.3, 0.2, 0.3], &[0.5, 0.5]);
        let options = AllocationOptions { max_allocations: 2, ..AllocationOptions::default() };
        let out = optimize_allocation(&p, EvalMode::Exact, &options).unwrap();
        assert!(out.heuristic);
        assert!(p.budget.admits(&out.best.allocation));
        let exhaustive = optimize_allocation(&p, EvalMode::Exact, &AllocationOptions::default()).unwrap();
        assert!(out.best.order.score <= exhaustive.best.order.score + 1e-12);
    }

    #[test]
    fn mismatched_problem_is_rejected() {
        let p = problem(&[6, 6, 6], &[1.0], &[0.3, 0.3], &[0.5]);
        assert!(optimize_allocation(&p, EvalMode::Exact, &AllocationOptions::default()).is_err());
    }
}

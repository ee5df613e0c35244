//! Searching the space of swapping orders.
//!
//! Every static order corresponds to a full binary tree whose leaves are the
//! links (left to right) and whose internal vertices are the interior nodes.
//! Orders realizing the same tree give the same end-to-end distribution, so
//! exhaustive search only visits one canonical (post-order) order per tree.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::swap_engine::{Distribution, EvalMode, Evaluator, PathSpec, SwapOrder};

/// Default cap on the number of trees an exhaustive search may visit.
pub const DEFAULT_TREE_BUDGET: u128 = 1_000_000;

/// Relative gap under which two scores count as tied.
const TIE_TOLERANCE: f64 = 1e-12;

/// Full binary swap tree over a contiguous run of links.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SwapTree {
    /// Physical link `(i, i+1)`.
    Link(usize),
    /// Swap at `node`, joining the subtree left of it with the subtree right of it.
    Swap { node: usize, left: Box<SwapTree>, right: Box<SwapTree> },
}

impl SwapTree {
    /// Post-order traversal: both subtrees' swaps, then this node.
    pub fn canonical_order(&self) -> SwapOrder {
        let mut nodes = Vec::new();
        self.post_order(&mut nodes);
        SwapOrder::new(nodes)
    }

    fn post_order(&self, out: &mut Vec<usize>) {
        if let SwapTree::Swap { node, left, right } = self {
            left.post_order(out);
            right.post_order(out);
            out.push(*node);
        }
    }

    /// Links covered by this tree, left to right.
    pub fn leaves(&self) -> Vec<usize> {
        match self {
            SwapTree::Link(i) => vec![*i],
            SwapTree::Swap { left, right, .. } => {
                let mut out = left.leaves();
                out.extend(right.leaves());
                out
            }
        }
    }

    pub fn internal_count(&self) -> usize {
        match self {
            SwapTree::Link(_) => 0,
            SwapTree::Swap { left, right, .. } => 1 + left.internal_count() + right.internal_count(),
        }
    }

    pub fn root(&self) -> Option<usize> {
        match self {
            SwapTree::Link(_) => None,
            SwapTree::Swap { node, .. } => Some(*node),
        }
    }
}

/// `n`-th Catalan number, or `None` on `u128` overflow.
pub fn catalan(n: u32) -> Option<u128> {
    let mut c: u128 = 1;
    for i in 0..n as u128 {
        c = c.checked_mul(2 * (2 * i + 1))? / (i + 2);
    }
    Some(c)
}

/// Number of distinct swap trees on a path with `link_count` links.
pub fn tree_count(link_count: usize) -> Option<u128> {
    catalan(link_count.checked_sub(1)? as u32)
}

/// Builds the `index`-th tree over links `lo..hi` (`index < Catalan(hi-lo-1)`).
///
/// Trees are ordered by root position, then by left subtree, then right.
fn unrank(lo: usize, hi: usize, mut index: u128) -> SwapTree {
    if hi - lo == 1 {
        return SwapTree::Link(lo);
    }
    for node in lo + 1..hi {
        let left_count = catalan((node - lo - 1) as u32).expect("fits");
        let right_count = catalan((hi - node - 1) as u32).expect("fits");
        let block = left_count * right_count;
        if index < block {
            return SwapTree::Swap {
                node,
                left: Box::new(unrank(lo, node, index / right_count)),
                right: Box::new(unrank(node, hi, index % right_count)),
            };
        }
        index -= block;
    }
    unreachable!("tree index out of range")
}

/// All swap trees over `link_count >= 1` links.
pub fn enumerate_trees(link_count: usize) -> impl ExactSizeIterator<Item = SwapTree> {
    assert!(link_count >= 1, "a path has at least one link");
    let count = tree_count(link_count).expect("tree count overflows u128");
    let count = usize::try_from(count).expect("tree count exceeds usize");
    (0..count).map(move |i| unrank(0, link_count, i as u128))
}

/// An order with its expected end-to-end entanglements per slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredOrder {
    pub order: SwapOrder,
    pub score: f64,
}

impl fmt::Display for ScoredOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {:.2}", self.order, self.score)
    }
}

pub(crate) fn tied(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

/// Highest score wins; ties go to the lexicographically smallest order.
fn best_of(candidates: impl IntoIterator<Item = ScoredOrder>) -> Option<ScoredOrder> {
    candidates.into_iter().fold(None, |best, cand| match best {
        None => Some(cand),
        Some(b) if tied(cand.score, b.score) => Some(if cand.order < b.order { cand } else { b }),
        Some(b) if cand.score > b.score => Some(cand),
        keep => keep,
    })
}

/// Scores the canonical order of every tree, in enumeration order.
pub fn score_all_trees(path: &PathSpec, mode: EvalMode, budget: u128) -> Result<Vec<ScoredOrder>> {
    let links = path.link_count();
    let count = tree_count(links).unwrap_or(u128::MAX);
    if count > budget {
        return Err(Error::BudgetExceeded { count, cap: budget });
    }
    let evaluator = Evaluator::new(path, mode)?;
    let count = u64::try_from(count).expect("budget-bounded count fits u64");
    (0..count)
        .into_par_iter()
        .map(|i| {
            let order = unrank(0, links, i as u128).canonical_order();
            let score = evaluator.ent(&order)?.score;
            Ok(ScoredOrder { order, score })
        })
        .collect()
}

/// Exhaustive search over all swap trees, capped at [`DEFAULT_TREE_BUDGET`].
pub fn brute_force(path: &PathSpec, mode: EvalMode) -> Result<ScoredOrder> {
    brute_force_with_budget(path, mode, DEFAULT_TREE_BUDGET)
}

pub fn brute_force_with_budget(path: &PathSpec, mode: EvalMode, budget: u128) -> Result<ScoredOrder> {
    let all = score_all_trees(path, mode, budget)?;
    Ok(best_of(all).expect("at least one tree"))
}

/// Bookkeeping from a [`greedy_swap_traced`] run.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyTrace {
    pub result: ScoredOrder,
    /// Number of swap evaluations performed.
    pub swap_calls: usize,
    /// Whether any selection had to break a score tie.
    pub tie_broken: bool,
}

/// Greedy selection by swapping score: always swap next at the node whose
/// swap currently yields the most expected entanglements.
pub fn greedy_swap(path: &PathSpec, mode: EvalMode) -> Result<ScoredOrder> {
    greedy_swap_traced(path, mode).map(|t| t.result)
}

pub fn greedy_swap_traced(path: &PathSpec, mode: EvalMode) -> Result<GreedyTrace> {
    let evaluator = Evaluator::new(path, mode)?;
    let n = path.link_count();
    if n == 1 {
        let score = evaluator.link_distribution(0).mean();
        return Ok(GreedyTrace {
            result: ScoredOrder { order: SwapOrder::default(), score },
            swap_calls: 0,
            tie_broken: false,
        });
    }

    let mut from: Vec<Distribution> = (0..n).map(|i| evaluator.link_distribution(i).clone()).collect();
    let mut prev: Vec<usize> = (0..=n).map(|x| x.saturating_sub(1)).collect();
    let mut next: Vec<usize> = (0..=n).map(|x| (x + 1).min(n)).collect();
    let mut alive = vec![true; n + 1];
    alive[0] = false;
    alive[n] = false;
    // Score and prospective merged distribution of swapping at each node now.
    let mut pending: Vec<Option<(f64, Distribution)>> = vec![None; n + 1];
    let mut swap_calls = 0;

    let mut evaluate = |x: usize, from: &[Distribution], prev: &[usize]| {
        swap_calls += 1;
        let out = evaluator.swap(&from[prev[x]], &from[x], path.swap_prob(x));
        (out.score, out.distribution)
    };

    for x in 1..n {
        pending[x] = Some(evaluate(x, &from, &prev));
    }

    let mut order = Vec::with_capacity(n - 1);
    let mut tie_broken = false;
    let mut last_score = 0.0;
    for _ in 1..n {
        let mut best: Option<(usize, f64)> = None;
        let mut tie_at_best = false;
        for x in (1..n).filter(|&x| alive[x]) {
            let score = pending[x].as_ref().expect("scored").0;
            match best {
                None => best = Some((x, score)),
                Some((_, b)) if tied(score, b) => tie_at_best = true,
                Some((_, b)) if score > b => {
                    best = Some((x, score));
                    tie_at_best = false;
                }
                _ => {}
            }
        }
        let (s, score) = best.expect("an interior node remains");
        tie_broken |= tie_at_best;
        order.push(s);
        last_score = score;

        let (l, r) = (prev[s], next[s]);
        let (_, merged) = pending[s].take().expect("scored");
        from[l] = merged;
        alive[s] = false;
        next[l] = r;
        prev[r] = l;

        if l > 0 {
            pending[l] = Some(evaluate(l, &from, &prev));
        }
        if r < n {
            pending[r] = Some(evaluate(r, &from, &prev));
        }
    }

    Ok(GreedyTrace {
        result: ScoredOrder { order: SwapOrder::new(order), score: last_score },
        swap_calls,
        tie_broken,
    })
}

/// Doubling order: split each segment at its midpoint node `ceil((lo+hi)/2)`,
/// emitting the left half, the right half, then the midpoint.
pub fn balanced_order(node_count: usize) -> SwapOrder {
    fn split(lo: usize, hi: usize, out: &mut Vec<usize>) {
        if hi - lo < 2 {
            return;
        }
        let mid = (lo + hi).div_ceil(2);
        split(lo, mid, out);
        split(mid, hi, out);
        out.push(mid);
    }
    let mut out = Vec::new();
    if node_count >= 2 {
        split(0, node_count - 1, &mut out);
    }
    SwapOrder::new(out)
}

pub fn balanced_tree(path: &PathSpec) -> SwapOrder {
    balanced_order(path.node_count())
}

/// Greedy order unless the balanced tree scores at least as well.
pub fn vora_swap(path: &PathSpec, mode: EvalMode) -> Result<ScoredOrder> {
    let greedy = greedy_swap(path, mode)?;
    let order = balanced_tree(path);
    let score = Evaluator::new(path, mode)?.ent(&order)?.score;
    if greedy.score > score {
        Ok(greedy)
    } else {
        Ok(ScoredOrder { order, score })
    }
}

/// Order-selection strategies exposed to callers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    BruteForce,
    Greedy,
    Vora,
    Balanced,
    LeftToRight,
    RightToLeft,
}

impl Strategy {
    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "brute" => Strategy::BruteForce,
            "greedy" => Strategy::Greedy,
            "vora" => Strategy::Vora,
            "balanced" | "baln" => Strategy::Balanced,
            "l2r" => Strategy::LeftToRight,
            "r2l" => Strategy::RightToLeft,
            other => return Err(Error::InvalidParameter(format!("unknown strategy {other:?}"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::BruteForce => "brute",
            Strategy::Greedy => "greedy",
            Strategy::Vora => "vora",
            Strategy::Balanced => "balanced",
            Strategy::LeftToRight => "l2r",
            Strategy::RightToLeft => "r2l",
        }
    }

    pub fn run(&self, path: &PathSpec, mode: EvalMode) -> Result<ScoredOrder> {
        let fixed = |order: SwapOrder| -> Result<ScoredOrder> {
            let score = Evaluator::new(path, mode)?.ent(&order)?.score;
            Ok(ScoredOrder { order, score })
        };
        match self {
            Strategy::BruteForce => brute_force(path, mode),
            Strategy::Greedy => greedy_swap(path, mode),
            Strategy::Vora => vora_swap(path, mode),
            Strategy::Balanced => fixed(balanced_tree(path)),
            Strategy::LeftToRight => fixed(SwapOrder::left_to_right(path.node_count())),
            Strategy::RightToLeft => fixed(SwapOrder::right_to_left(path.node_count())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::swap_engine::ent;
    use std::collections::HashSet;

    fn example1() -> PathSpec {
        PathSpec::uniform(&[100, 200, 300, 400], 0.2, 0.5).unwrap()
    }

    fn example2() -> PathSpec {
        PathSpec::uniform(&[100, 101, 101, 100], 0.2, 0.5).unwrap()
    }

    fn order(nodes: &[usize]) -> SwapOrder {
        SwapOrder::new(nodes.to_vec())
    }

    #[test]
    fn catalan_counts() {
        let expected = [1u128, 1, 2, 5, 14, 42, 132, 429, 1430, 4862, 16796, 58786];
        for (n, &c) in expected.iter().enumerate() {
            assert_eq!(catalan(n as u32), Some(c));
        }
        assert_eq!(tree_count(2), Some(1));
        assert_eq!(tree_count(4), Some(5));
        assert_eq!(tree_count(9), Some(1430));
        assert!(catalan(200).is_none());
    }

    #[test]
    fn trees_are_distinct_and_well_formed() {
        for links in 1..=9 {
            let mut seen = HashSet::new();
            let mut count = 0;
            for tree in enumerate_trees(links) {
                assert_eq!(tree.leaves(), (0..links).collect::<Vec<_>>());
                assert_eq!(tree.internal_count(), links - 1);
                let o = tree.canonical_order();
                let mut sorted = o.nodes().to_vec();
                sorted.sort_unstable();
                assert_eq!(sorted, (1..links).collect::<Vec<_>>());
                assert!(seen.insert(o));
                count += 1;
            }
            assert_eq!(count as u128, tree_count(links).unwrap());
        }
    }

    #[test]
    fn canonical_orders_of_four_links() {
        let orders: Vec<String> = enumerate_trees(4).map(|t| t.canonical_order().to_string()).collect();
        assert_eq!(orders, ["[3,2,1]", "[2,3,1]", "[1,3,2]", "[2,1,3]", "[1,2,3]"]);
    }

    #[test]
    fn brute_force_examples() {
        let best = brute_force(&example1(), EvalMode::Exact).unwrap();
        assert_eq!(best.order, order(&[3, 2, 1]));
        assert!((best.score - 7.16).abs() <= 0.005);

        let best = brute_force(&example2(), EvalMode::Exact).unwrap();
        assert_eq!(best.order, order(&[1, 3, 2]));
        assert!((best.score - 3.72).abs() <= 0.005);

        let three = PathSpec::uniform(&[30, 50], 0.3, 0.7).unwrap();
        let best = brute_force(&three, EvalMode::Exact).unwrap();
        assert_eq!(best.order, order(&[1]));
        assert_eq!(best.score, ent(&three, &order(&[1]), EvalMode::Exact).unwrap().score);
    }

    #[test]
    fn brute_force_respects_budget() {
        let path = PathSpec::uniform(&[5; 8], 0.5, 0.5).unwrap();
        assert_eq!(
            brute_force_with_budget(&path, EvalMode::Exact, 100),
            Err(Error::BudgetExceeded { count: 429, cap: 100 })
        );
    }

    #[test]
    fn greedy_examples() {
        let g = greedy_swap(&example1(), EvalMode::Exact).unwrap();
        assert_eq!(g.order, order(&[3, 2, 1]));
        assert!((g.score - 7.16).abs() <= 0.005);

        let g = greedy_swap(&example2(), EvalMode::Exact).unwrap();
        assert_eq!(g.order, order(&[2, 1, 3]));
        assert!((g.score - 2.24).abs() <= 0.005);

        let three = PathSpec::uniform(&[3, 4], 0.5, 0.5).unwrap();
        assert_eq!(greedy_swap(&three, EvalMode::Exact).unwrap().order, order(&[1]));
    }

    #[test]
    fn greedy_score_is_ent_of_its_order() {
        for path in [example1(), example2(), PathSpec::uniform(&[7, 3, 9, 4, 6, 8], 0.4, 0.8).unwrap()] {
            let g = greedy_swap(&path, EvalMode::Exact).unwrap();
            assert_eq!(g.score, ent(&path, &g.order, EvalMode::Exact).unwrap().score);
        }
    }

    #[test]
    fn greedy_call_count_bound() {
        for links in 2..=9 {
            let path = PathSpec::uniform(&vec![6; links], 0.5, 0.5).unwrap();
            let trace = greedy_swap_traced(&path, EvalMode::Exact).unwrap();
            assert_eq!(trace.result.order.len(), links - 1);
            assert!(trace.swap_calls <= 3 * (links - 1));
        }
    }

    #[test]
    fn balanced_orders() {
        assert_eq!(balanced_order(5), order(&[1, 3, 2]));
        assert_eq!(balanced_order(3), order(&[1]));
        assert_eq!(balanced_order(2), order(&[]));
        let six = balanced_order(6);
        assert_eq!(six.len(), 4);
        assert_eq!(*six.nodes().last().unwrap(), 3);

        let path = PathSpec::uniform(&[9; 5], 0.4, 0.6).unwrap();
        let mirror = six.mirrored(6);
        let a = ent(&path, &six, EvalMode::Exact).unwrap().score;
        let b = ent(&path, &mirror, EvalMode::Exact).unwrap().score;
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn vora_examples() {
        let v = vora_swap(&example2(), EvalMode::Exact).unwrap();
        assert_eq!(v.order, order(&[1, 3, 2]));
        assert!((v.score - 3.72).abs() <= 0.005);

        let v = vora_swap(&example1(), EvalMode::Exact).unwrap();
        assert_eq!(v.order, order(&[3, 2, 1]));

        let homogeneous = PathSpec::uniform(&[10; 3], 0.3, 0.5).unwrap();
        let v = vora_swap(&homogeneous, EvalMode::Exact).unwrap();
        let g = greedy_swap(&homogeneous, EvalMode::Exact).unwrap();
        let b = ent(&homogeneous, &balanced_tree(&homogeneous), EvalMode::Exact).unwrap().score;
        assert!(v.score >= g.score.max(b));
    }

    #[test]
    fn strategies_by_name() {
        let path = example1();
        for name in ["brute", "greedy", "vora", "balanced", "l2r", "r2l"] {
            let s = Strategy::from_name(name).unwrap();
            assert_eq!(s.name(), name);
            assert_eq!(s.run(&path, EvalMode::Exact).unwrap().order.len(), 3);
        }
        assert_eq!(Strategy::LeftToRight.run(&path, EvalMode::Exact).unwrap().order, order(&[1, 2, 3]));
        assert!(Strategy::from_name("random").is_err());
    }
}

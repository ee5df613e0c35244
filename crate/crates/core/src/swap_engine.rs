//! Swap outcomes and path throughput for a fixed swapping order.
//!
//! A path `0 - 1 - ... - n` carries one entanglement-count distribution per
//! (logical) link. Swapping at an interior node consumes the distributions of
//! its two current neighbours' links and yields the distribution of the merged
//! link, whose mean is the node's swapping score. Folding every interior node
//! in a given order leaves one end-to-end distribution; its mean is the path
//! throughput for that order.
//!
//! Four evaluation modes trade exactness for speed:
//!
//! * [`EvalMode::Exact`]: full pmfs.
//! * [`EvalMode::Tail`]: pmfs truncated after every step with [`approx_tail`].
//! * [`EvalMode::Normal`]: (mean, variance) pairs only, constant time per swap.
//! * [`EvalMode::Hybrid`]: normal where the three-sigma condition holds for both
//!   operands of a swap, tail-truncated pmfs otherwise.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::distributions::{
    approx_tail, b2n, binomial_pmf, fill_binomial, min_normal_moments, n2b, std_normal_cdf, BinomialParams,
    NormalParams, Pmf,
};
use crate::error::{Error, Result};

/// Tail tolerance used when an approximate mode has to fall back to pmfs.
pub const DEFAULT_EPSILON: f64 = 1e-5;

/// One physical link: `capacity` attempts per slot, each succeeding with `success`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkSpec {
    pub capacity: u64,
    pub success: f64,
}

impl LinkSpec {
    pub fn params(&self) -> BinomialParams {
        BinomialParams { trials: self.capacity, success: self.success }
    }
}

/// A repeater path with nodes `0..=n`, links `(i, i+1)` and swap probabilities
/// for the interior nodes `1..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSpec {
    links: Vec<LinkSpec>,
    swap_probs: Vec<f64>,
}

impl PathSpec {
    pub fn new(links: Vec<LinkSpec>, swap_probs: Vec<f64>) -> Result<Self> {
        if links.is_empty() {
            return Err(Error::InvalidPath("a path needs at least one link".into()));
        }
        if swap_probs.len() + 1 != links.len() {
            return Err(Error::InvalidPath(format!(
                "{} links need {} swap probabilities, got {}",
                links.len(),
                links.len() - 1,
                swap_probs.len()
            )));
        }
        for (i, link) in links.iter().enumerate() {
            if link.capacity == 0 {
                return Err(Error::InvalidPath(format!("link {i} has zero capacity")));
            }
            if !(0.0..=1.0).contains(&link.success) {
                return Err(Error::InvalidPath(format!("link {i} success {} outside [0, 1]", link.success)));
            }
        }
        if let Some((i, q)) = swap_probs.iter().enumerate().find(|(_, q)| !(0.0..=1.0).contains(*q)) {
            return Err(Error::InvalidPath(format!("swap probability of node {} is {q}", i + 1)));
        }
        Ok(Self { links, swap_probs })
    }

    /// Path whose links share one success probability and whose nodes share one swap probability.
    pub fn uniform(capacities: &[u64], success: f64, swap_prob: f64) -> Result<Self> {
        let links = capacities.iter().map(|&capacity| LinkSpec { capacity, success }).collect::<Vec<_>>();
        let swaps = vec![swap_prob; capacities.len().saturating_sub(1)];
        Self::new(links, swaps)
    }

    pub fn links(&self) -> &[LinkSpec] {
        &self.links
    }

    pub fn swap_probs(&self) -> &[f64] {
        &self.swap_probs
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn node_count(&self) -> usize {
        self.links.len() + 1
    }

    /// Swap probability of interior node `node` (1-based).
    pub fn swap_prob(&self, node: usize) -> f64 {
        self.swap_probs[node - 1]
    }

    /// Minimum link capacity along the whole path.
    pub fn width(&self) -> u64 {
        self.links.iter().map(|l| l.capacity).min().unwrap_or(0)
    }

    /// The same path read from the other end.
    pub fn mirrored(&self) -> Self {
        let mut links = self.links.clone();
        links.reverse();
        let mut swap_probs = self.swap_probs.clone();
        swap_probs.reverse();
        Self { links, swap_probs }
    }

    /// Checks that `order` is a permutation of the interior nodes.
    pub fn check_order(&self, order: &SwapOrder) -> Result<()> {
        let interior = self.node_count() - 2;
        if order.len() != interior {
            return Err(Error::InvalidOrder(format!(
                "{order} has {} entries but the path has {interior} interior nodes",
                order.len()
            )));
        }
        let mut seen = vec![false; interior + 1];
        for &node in order.nodes() {
            if node == 0 || node > interior {
                return Err(Error::InvalidOrder(format!("{node} is not an interior node of this path")));
            }
            if std::mem::replace(&mut seen[node], true) {
                return Err(Error::InvalidOrder(format!("node {node} appears twice")));
            }
        }
        Ok(())
    }
}

/// Minimum capacity of the links strictly between nodes `x` and `y`.
pub fn subpath_capacity(path: &PathSpec, x: usize, y: usize) -> Result<u64> {
    if x >= y || y > path.link_count() {
        return Err(Error::InvalidParameter(format!("subpath ({x}, {y}) is not within 0..={}", path.link_count())));
    }
    Ok(path.links[x..y].iter().map(|l| l.capacity).min().expect("non-empty"))
}

/// Sequence of interior node ids in the order they swap.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SwapOrder(Vec<usize>);

impl SwapOrder {
    pub fn new(nodes: Vec<usize>) -> Self {
        Self(nodes)
    }

    /// Left to right: `1, 2, ..., n-1`.
    pub fn left_to_right(node_count: usize) -> Self {
        Self((1..node_count.saturating_sub(1)).collect())
    }

    /// Right to left: `n-1, ..., 1`.
    pub fn right_to_left(node_count: usize) -> Self {
        Self((1..node_count.saturating_sub(1)).rev().collect())
    }

    pub fn nodes(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Node ids reflected onto the reversed path of `node_count` nodes.
    pub fn mirrored(&self, node_count: usize) -> Self {
        Self(self.0.iter().map(|&x| node_count - 1 - x).collect())
    }
}

impl fmt::Display for SwapOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, node) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{node}")?;
        }
        write!(f, "]")
    }
}

impl FromStr for SwapOrder {
    type Err = Error;

    /// Parses `3,2,1` or `[3,2,1]`.
    fn from_str(s: &str) -> Result<Self> {
        let trimmed = s.trim().trim_start_matches('[').trim_end_matches(']').trim();
        if trimmed.is_empty() {
            return Ok(Self::default());
        }
        trimmed
            .split(',')
            .map(|tok| {
                tok.trim().parse::<usize>().map_err(|_| Error::InvalidOrder(format!("cannot parse {tok:?} as a node id")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }
}

/// How distributions are represented while evaluating an order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvalMode {
    Exact,
    Tail { epsilon: f64 },
    Normal,
    Hybrid { epsilon: f64 },
}

impl EvalMode {
    pub fn validate(&self) -> Result<()> {
        match *self {
            EvalMode::Tail { epsilon } | EvalMode::Hybrid { epsilon } if !(epsilon > 0.0 && epsilon < 1.0) => {
                Err(Error::InvalidParameter(format!("epsilon {epsilon} must lie in (0, 1)")))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EvalMode::Exact => "exact",
            EvalMode::Tail { .. } => "tail",
            EvalMode::Normal => "normal",
            EvalMode::Hybrid { .. } => "hybrid",
        }
    }

    /// Builds a mode from its name; `epsilon` is used by `tail` and `hybrid`.
    pub fn from_name(name: &str, epsilon: f64) -> Result<Self> {
        let mode = match name {
            "exact" => EvalMode::Exact,
            "tail" => EvalMode::Tail { epsilon },
            "normal" => EvalMode::Normal,
            "hybrid" => EvalMode::Hybrid { epsilon },
            other => return Err(Error::InvalidParameter(format!("unknown mode {other:?}"))),
        };
        mode.validate()?;
        Ok(mode)
    }
}

/// A link distribution in whichever representation the mode uses.
#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    Pmf(Pmf),
    Normal(NormalParams),
}

impl Distribution {
    pub fn mean(&self) -> f64 {
        match self {
            Distribution::Pmf(p) => p.mean(),
            Distribution::Normal(n) => n.mean,
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            Distribution::Pmf(p) => p.variance(),
            Distribution::Normal(n) => n.variance,
        }
    }

    pub fn as_pmf(&self) -> Option<&Pmf> {
        match self {
            Distribution::Pmf(p) => Some(p),
            Distribution::Normal(_) => None,
        }
    }

    fn normal(&self) -> NormalParams {
        match self {
            Distribution::Pmf(p) => p.moments(),
            Distribution::Normal(n) => *n,
        }
    }

    /// Whether the binomial matched to this distribution passes the three-sigma test.
    fn is_near_normal(&self) -> bool {
        n2b(self.normal()).map(|b| b.satisfies_three_sigma()).unwrap_or(false)
    }
}

/// Outcome of one swap: the node's score and the merged link distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapOutcome {
    pub score: f64,
    pub distribution: Distribution,
}

/// End-to-end result of evaluating an order.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub score: f64,
    pub distribution: Distribution,
}

/// Exact swap of two count pmfs with swap probability `q`.
///
/// The merged count is `B(min(L, R), q)`: the minimum is formed from the
/// product of the two survival functions and then binomially thinned.
/// `P(0)` is recomputed as one minus the mass on positive counts.
pub fn swap_exact(left: &Pmf, right: &Pmf, q: f64) -> (f64, Pmf) {
    let support = left.support().min(right.support());
    let (sl, sr) = (left.survival(), right.survival());
    let at_least = |m: usize| if m > support { 0.0 } else { sl[m] * sr[m] };
    let mut out = vec![0.0; support + 1];
    let mut row = Vec::with_capacity(support + 1);
    for m in 1..=support {
        let mass = at_least(m) - at_least(m + 1);
        if mass == 0.0 {
            continue;
        }
        fill_binomial(m as u64, q, &mut row);
        for (slot, r) in out[1..=m].iter_mut().zip(&row[1..]) {
            *slot += mass * r;
        }
    }
    let positive: f64 = out[1..].iter().sum();
    out[0] = (1.0 - positive).max(0.0);
    let score = out.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
    (score, Pmf::from_vec_unchecked(out))
}

/// Constant-time swap of two normal surrogates: min via Gaussian order
/// statistics, moment-matched to a binomial, thinned by `q`.
pub fn swap_normal(left: NormalParams, right: NormalParams, q: f64) -> Result<NormalParams> {
    let min = min_normal_moments(left, right, 0.0)?;
    let matched = n2b(min)?;
    Ok(b2n(BinomialParams { trials: matched.trials, success: q * matched.success }))
}

/// Discretizes an over-dispersed normal (no binomial moment match) onto the counts.
fn discretize_normal(normal: NormalParams) -> Pmf {
    if normal.mean <= 0.0 {
        return Pmf::point_mass(0);
    }
    let sd = normal.std_dev();
    if sd == 0.0 {
        return Pmf::point_mass(normal.mean.round() as usize);
    }
    let top = (normal.mean + 8.0 * sd).ceil().max(1.0) as usize;
    let cdf = |x: f64| std_normal_cdf((x - normal.mean) / sd);
    let mut probs: Vec<f64> = (0..=top).map(|k| cdf(k as f64 + 0.5) - cdf(k as f64 - 0.5)).collect();
    probs[0] = cdf(0.5);
    probs[top] = 1.0 - cdf(top as f64 - 0.5);
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    Pmf::from_vec_unchecked(probs)
}

/// Evaluates orders on one path in one mode, caching the initial link
/// distributions (one per distinct `(capacity, success)` pair).
///
/// The cache is filled lazily through [`OnceLock`], so one evaluator can be
/// shared across threads.
pub struct Evaluator<'a> {
    path: &'a PathSpec,
    mode: EvalMode,
    slot_of_link: Vec<usize>,
    slots: Vec<OnceLock<Distribution>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(path: &'a PathSpec, mode: EvalMode) -> Result<Self> {
        mode.validate()?;
        let mut seen: HashMap<(u64, u64), usize> = HashMap::new();
        let slot_of_link = path
            .links()
            .iter()
            .map(|l| {
                let next = seen.len();
                *seen.entry((l.capacity, l.success.to_bits())).or_insert(next)
            })
            .collect();
        let slots = (0..seen.len()).map(|_| OnceLock::new()).collect();
        Ok(Self { path, mode, slot_of_link, slots })
    }

    pub fn path(&self) -> &PathSpec {
        self.path
    }

    pub fn mode(&self) -> EvalMode {
        self.mode
    }

    /// Initial distribution of physical link `index` (link `(index, index+1)`).
    pub fn link_distribution(&self, index: usize) -> &Distribution {
        let params = self.path.links()[index].params();
        self.slots[self.slot_of_link[index]].get_or_init(|| match self.mode {
            EvalMode::Exact => Distribution::Pmf(binomial_pmf(params)),
            EvalMode::Tail { epsilon } => Distribution::Pmf(truncate(binomial_pmf(params), epsilon)),
            EvalMode::Normal => Distribution::Normal(b2n(params)),
            EvalMode::Hybrid { epsilon } => {
                if params.satisfies_three_sigma() {
                    Distribution::Normal(b2n(params))
                } else {
                    Distribution::Pmf(truncate(binomial_pmf(params), epsilon))
                }
            }
        })
    }

    /// Swaps two adjacent logical-link distributions at a node with swap probability `q`.
    pub fn swap(&self, left: &Distribution, right: &Distribution, q: f64) -> SwapOutcome {
        match self.mode {
            EvalMode::Exact => pmf_swap(left, right, q, None),
            EvalMode::Tail { epsilon } => pmf_swap(left, right, q, Some(epsilon)),
            EvalMode::Normal => normal_swap(left, right, q)
                .unwrap_or_else(|_| pmf_swap(left, right, q, Some(DEFAULT_EPSILON))),
            EvalMode::Hybrid { epsilon } => {
                if left.is_near_normal() && right.is_near_normal() {
                    normal_swap(left, right, q).unwrap_or_else(|_| pmf_swap(left, right, q, Some(epsilon)))
                } else {
                    pmf_swap(left, right, q, Some(epsilon))
                }
            }
        }
    }

    /// Throughput of `order`: the expected end-to-end count after all swaps.
    pub fn ent(&self, order: &SwapOrder) -> Result<Evaluation> {
        self.path.check_order(order)?;
        let n = self.path.link_count();
        if n == 1 {
            let distribution = self.link_distribution(0).clone();
            return Ok(Evaluation { score: distribution.mean(), distribution });
        }
        // Logical links are keyed by their left end; prev/next track the surviving nodes.
        let mut from: Vec<Option<Distribution>> = (0..n).map(|i| Some(self.link_distribution(i).clone())).collect();
        let mut prev: Vec<usize> = (0..=n).map(|x| x.saturating_sub(1)).collect();
        let mut next: Vec<usize> = (0..=n).map(|x| (x + 1).min(n)).collect();
        let mut last = None;
        for &s in order.nodes() {
            let (l, r) = (prev[s], next[s]);
            let left = from[l].take().expect("live link");
            let right = from[s].take().expect("live link");
            let outcome = self.swap(&left, &right, self.path.swap_prob(s));
            from[l] = Some(outcome.distribution.clone());
            next[l] = r;
            prev[r] = l;
            last = Some(outcome);
        }
        let outcome = last.expect("at least one swap");
        Ok(Evaluation { score: outcome.score, distribution: outcome.distribution })
    }
}

fn truncate(pmf: Pmf, epsilon: f64) -> Pmf {
    approx_tail(&pmf, epsilon).expect("epsilon validated by EvalMode")
}

fn materialize(dist: &Distribution, epsilon: Option<f64>) -> Pmf {
    let pmf = match dist {
        Distribution::Pmf(p) => return p.clone(),
        Distribution::Normal(n) => match n2b(*n) {
            Ok(params) => binomial_pmf(params),
            Err(_) => discretize_normal(*n),
        },
    };
    match epsilon {
        Some(eps) => truncate(pmf, eps),
        None => pmf,
    }
}

fn pmf_swap(left: &Distribution, right: &Distribution, q: f64, epsilon: Option<f64>) -> SwapOutcome {
    let (score, out) = match (left, right) {
        (Distribution::Pmf(l), Distribution::Pmf(r)) => swap_exact(l, r, q),
        _ => swap_exact(&materialize(left, epsilon), &materialize(right, epsilon), q),
    };
    let out = match epsilon {
        Some(eps) => truncate(out, eps),
        None => out,
    };
    SwapOutcome { score, distribution: Distribution::Pmf(out) }
}

fn normal_swap(left: &Distribution, right: &Distribution, q: f64) -> Result<SwapOutcome> {
    let out = swap_normal(left.normal(), right.normal(), q)?;
    Ok(SwapOutcome { score: out.mean, distribution: Distribution::Normal(out) })
}

/// Throughput of `order` on `path` under `mode`.
pub fn ent(path: &PathSpec, order: &SwapOrder, mode: EvalMode) -> Result<Evaluation> {
    Evaluator::new(path, mode)?.ent(order)
}

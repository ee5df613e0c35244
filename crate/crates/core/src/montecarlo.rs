//! Seeded Monte Carlo sampling of the slot model.
//!
//! Trials are grouped in fixed blocks; block `b` draws from ChaCha stream `b`
//! of the seed, and per-block integer sums are added exactly, so the outcome
//! depends only on the inputs and the seed, never on the worker count.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::swap_engine::{PathSpec, SwapOrder};

const BLOCK: u64 = 4096;

/// Empirical statistics of the end-to-end count per slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotOutcome {
    pub mean: f64,
    /// Unbiased sample variance; zero for a single trial.
    pub variance: f64,
    pub trials: u64,
    pub seed: u64,
}

impl SlotOutcome {
    pub fn standard_error(&self) -> f64 {
        (self.variance / self.trials as f64).sqrt()
    }

    /// Discrepancy from `expected` in standard errors. Infinite if the
    /// sample has no spread but misses `expected`.
    pub fn z_score(&self, expected: f64) -> f64 {
        let diff = self.mean - expected;
        let se = self.standard_error();
        if se > 0.0 {
            diff / se
        } else if diff == 0.0 {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        }
    }
}

fn binomial<R: Rng>(rng: &mut R, trials: u64, p: f64) -> u64 {
    if trials == 0 || p <= 0.0 {
        0
    } else if p >= 1.0 {
        trials
    } else {
        Binomial::new(trials, p).expect("probability checked").sample(rng)
    }
}

/// Order in which one trial applies its swaps.
enum Schedule<'a> {
    Fixed(&'a [usize]),
    Shuffled,
}

struct Sampler<'a> {
    path: &'a PathSpec,
    schedule: Schedule<'a>,
}

impl Sampler<'_> {
    fn trial(&self, rng: &mut ChaCha8Rng, counts: &mut Vec<u64>, prev: &mut Vec<usize>, next: &mut Vec<usize>, nodes: &mut Vec<usize>) -> u64 {
        let n = self.path.link_count();
        counts.clear();
        counts.extend(self.path.links().iter().map(|l| binomial(rng, l.capacity, l.success)));
        prev.clear();
        prev.extend((0..=n).map(|v| v.saturating_sub(1)));
        next.clear();
        next.extend(1..=n + 1);
        let order: &[usize] = match self.schedule {
            Schedule::Fixed(order) => order,
            Schedule::Shuffled => {
                nodes.clear();
                nodes.extend(1..n);
                nodes.shuffle(rng);
                nodes
            }
        };
        for &v in order {
            let (l, r) = (prev[v], next[v]);
            counts[l] = binomial(rng, counts[l].min(counts[v]), self.path.swap_prob(v));
            next[l] = r;
            prev[r] = l;
        }
        counts[0]
    }

    fn run(&self, trials: u64, seed: u64) -> SlotOutcome {
        let blocks = trials.div_ceil(BLOCK);
        let (sum, sum_sq) = (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(b);
                let (mut counts, mut prev, mut next, mut nodes) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
                let len = BLOCK.min(trials - b * BLOCK);
                let (mut s, mut s2) = (0u128, 0u128);
                for _ in 0..len {
                    let x = self.trial(&mut rng, &mut counts, &mut prev, &mut next, &mut nodes) as u128;
                    s += x;
                    s2 += x * x;
                }
                (s, s2)
            })
            .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
        let n = trials as f64;
        let mean = sum as f64 / n;
        let variance = if trials > 1 {
            let t = trials as u128;
            let numerator = match sum_sq.checked_mul(t) {
                Some(scaled) => (scaled - sum * sum) as f64,
                None => sum_sq as f64 * n - (sum as f64).powi(2),
            };
            (numerator / (n * (n - 1.0))).max(0.0)
        } else {
            0.0
        };
        SlotOutcome { mean, variance, trials, seed }
    }
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidParameter("at least one trial is required".into()));
    }
    Ok(())
}

/// Samples the end-to-end count of `path` swapped in `order`.
pub fn simulate_order(path: &PathSpec, order: &SwapOrder, trials: u64, seed: u64) -> Result<SlotOutcome> {
    check_trials(trials)?;
    path.check_order(order)?;
    Ok(Sampler { path, schedule: Schedule::Fixed(order.nodes()) }.run(trials, seed))
}

/// Samples with a fresh uniformly random swap order per trial.
pub fn simulate_asap(path: &PathSpec, trials: u64, seed: u64) -> Result<SlotOutcome> {
    check_trials(trials)?;
    Ok(Sampler { path, schedule: Schedule::Shuffled }.run(trials, seed))
}

//! Entanglement-count distributions.
//!
//! Two representations are used throughout the crate: an exact probability
//! mass function over `{0..=support}` ([`Pmf`]) and a (mean, variance) pair
//! ([`NormalParams`]) for the constant-time approximate path. This module
//! holds the conversions between them together with tail truncation and the
//! moments of the minimum of two Gaussians.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Above this many trials binomial terms are evaluated independently in log space.
const LOG_SPACE_TRIALS: u64 = 1000;

/// Tolerance on total mass accepted by [`Pmf::new`].
const MASS_TOLERANCE: f64 = 1e-9;

/// Probability mass function of an entanglement count on `{0..=support}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    probs: Vec<f64>,
}

impl Pmf {
    /// Validates and wraps a probability vector indexed by count.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidParameter("pmf must have at least one entry".into()));
        }
        if let Some((k, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0 || **p > 1.0)
        {
            return Err(Error::InvalidParameter(format!("pmf entry {k} = {p} is outside [0, 1]")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidParameter(format!("pmf sums to {total}, not 1")));
        }
        Ok(Self { probs })
    }

    pub(crate) fn from_vec_unchecked(probs: Vec<f64>) -> Self {
        debug_assert!(!probs.is_empty());
        Self { probs }
    }

    /// All mass on `k`, with support exactly `k`.
    pub fn point_mass(k: usize) -> Self {
        let mut probs = vec![0.0; k + 1];
        probs[k] = 1.0;
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Largest representable count (`len - 1`).
    pub fn support(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.probs
            .iter()
            .enumerate()
            .map(|(k, p)| (k as f64 - mean).powi(2) * p)
            .sum()
    }

    /// Mean and variance as a normal surrogate.
    pub fn moments(&self) -> NormalParams {
        NormalParams { mean: self.mean(), variance: self.variance() }
    }

    /// `P(X >= k)` for `k = 0..=support`, summed from the top for accuracy in the tail.
    pub fn survival(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.probs.len()];
        let mut acc = 0.0;
        for k in (0..self.probs.len()).rev() {
            acc += self.probs[k];
            out[k] = acc;
        }
        out
    }
}

/// Parameters of a binomial count `B(trials, success)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinomialParams {
    pub trials: u64,
    pub success: f64,
}

impl BinomialParams {
    pub fn new(trials: u64, success: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&success) {
            return Err(Error::InvalidParameter(format!("success probability {success} outside [0, 1]")));
        }
        Ok(Self { trials, success })
    }

    pub fn mean(&self) -> f64 {
        self.trials as f64 * self.success
    }

    /// Whether `B(C, p)` is close enough to `N(Cp, Cp(1-p))`: `C > 9 max{(1-p)/p, p/(1-p)}`.
    pub fn satisfies_three_sigma(&self) -> bool {
        let p = self.success;
        if p <= 0.0 || p >= 1.0 {
            return false;
        }
        self.trials as f64 > 9.0 * ((1.0 - p) / p).max(p / (1.0 - p))
    }
}

/// Mean and variance of a normal surrogate for an entanglement count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalParams {
    pub mean: f64,
    pub variance: f64,
}

impl NormalParams {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() || !variance.is_finite() || variance < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "normal parameters ({mean}, {variance}) need finite values and variance >= 0"
            )));
        }
        Ok(Self { mean, variance })
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Standard normal CDF.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

fn ln_choose(n: u64, k: u64) -> f64 {
    let (n, k) = (n as f64, k as f64);
    libm::lgamma(n + 1.0) - libm::lgamma(k + 1.0) - libm::lgamma(n - k + 1.0)
}

/// Writes the `B(trials, success)` pmf into `out` (resized to `trials + 1`).
pub(crate) fn fill_binomial(trials: u64, success: f64, out: &mut Vec<f64>) {
    let n = trials as usize;
    out.clear();
    out.resize(n + 1, 0.0);
    if success <= 0.0 {
        out[0] = 1.0;
        return;
    }
    if success >= 1.0 {
        out[n] = 1.0;
        return;
    }
    let ln_p = success.ln();
    let ln_q = (-success).ln_1p();
    if trials > LOG_SPACE_TRIALS {
        for (k, slot) in out.iter_mut().enumerate() {
            let k64 = k as u64;
            *slot = (ln_choose(trials, k64) + k as f64 * ln_p + (trials - k64) as f64 * ln_q).exp();
        }
        return;
    }
    // Anchor at the mode and walk outwards with the ratio recurrence so that
    // underflowing tails never poison the bulk of the distribution.
    let mode = (((trials + 1) as f64 * success).floor() as usize).min(n);
    let m64 = mode as u64;
    out[mode] = (ln_choose(trials, m64) + mode as f64 * ln_p + (trials - m64) as f64 * ln_q).exp();
    let odds = success / (1.0 - success);
    for k in mode..n {
        out[k + 1] = out[k] * ((n - k) as f64 / (k + 1) as f64) * odds;
    }
    for k in (1..=mode).rev() {
        out[k - 1] = out[k] * (k as f64 / (n - k + 1) as f64) / odds;
    }
}

/// Exact pmf of `B(trials, success)`.
pub fn binomial_pmf(params: BinomialParams) -> Pmf {
    let mut probs = Vec::new();
    fill_binomial(params.trials, params.success, &mut probs);
    Pmf::from_vec_unchecked(probs)
}

/// Truncates `pmf` at the smallest `K` whose cumulative mass reaches `1 - epsilon`.
///
/// Everything above `K` is moved onto `K`, so the result is a stochastic lower
/// bound of the input with the same total mass and an unchanged prefix.
pub fn approx_tail(pmf: &Pmf, epsilon: f64) -> Result<Pmf> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon {epsilon} must lie in (0, 1)")));
    }
    let probs = pmf.probs();
    let target = 1.0 - epsilon;
    let mut cumulative = 0.0;
    let mut cut = probs.len() - 1;
    for (k, p) in probs.iter().enumerate() {
        cumulative += p;
        if cumulative >= target {
            cut = k;
            break;
        }
    }
    if cut == probs.len() - 1 {
        return Ok(pmf.clone());
    }
    let mut out = probs[..=cut].to_vec();
    out[cut] = probs[cut..].iter().rev().sum();
    Ok(Pmf::from_vec_unchecked(out))
}

fn hoeffding_bound(trials: u64, success: f64, k: u64) -> f64 {
    let c = trials as f64;
    let excess = k as f64 / c - success;
    (-2.0 * c * excess * excess).exp()
}

/// Smallest `K >= trials * success` whose Hoeffding bound
/// `exp(-2 C (K/C - p)^2)` on `P(X >= K)` is at most `epsilon`; `trials` if none is.
pub fn hoeffding_support(trials: u64, success: f64, epsilon: f64) -> u64 {
    if trials == 0 {
        return 0;
    }
    let c = trials as f64;
    let lower = ((c * success).ceil() as u64).min(trials);
    if epsilon >= 1.0 {
        return lower;
    }
    if epsilon <= 0.0 {
        return trials;
    }
    // Closed-form solve, then settle rounding at the integer boundary.
    let guess = c * success + (c * (1.0 / epsilon).ln() / 2.0).sqrt();
    let mut k = (guess.ceil().max(0.0) as u64).clamp(lower, trials);
    while k > lower && hoeffding_bound(trials, success, k - 1) <= epsilon {
        k -= 1;
    }
    while k < trials && hoeffding_bound(trials, success, k) > epsilon {
        k += 1;
    }
    k
}

/// Normal surrogate `N(Cp, Cp(1-p))` of a binomial.
pub fn b2n(params: BinomialParams) -> NormalParams {
    let mean = params.mean();
    NormalParams { mean, variance: mean * (1.0 - params.success) }
}

/// Moment-matched binomial `(round(mu^2 / (mu - var)), 1 - var/mu)`.
pub fn n2b(normal: NormalParams) -> Result<BinomialParams> {
    let NormalParams { mean, variance } = normal;
    if !(mean > 0.0) || !(variance >= 0.0) || mean <= variance {
        return Err(Error::InvalidMoments { mean, variance });
    }
    let trials = (mean * mean / (mean - variance)).round();
    let success = (1.0 - variance / mean).clamp(0.0, 1.0);
    Ok(BinomialParams { trials: trials as u64, success })
}

/// Mean and variance of `min(X1, X2)` for jointly Gaussian `X1 ~ a`, `X2 ~ b`
/// with correlation `rho`.
///
/// The result is bit-for-bit symmetric in `a` and `b`.
pub fn min_normal_moments(a: NormalParams, b: NormalParams, rho: f64) -> Result<NormalParams> {
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::InvalidParameter(format!("correlation {rho} outside [-1, 1]")));
    }
    if a.variance < 0.0 || b.variance < 0.0 {
        return Err(Error::InvalidParameter("negative variance".into()));
    }
    let (first, second) = if (a.mean, a.variance) <= (b.mean, b.variance) { (a, b) } else { (b, a) };
    let (s1, s2) = (first.std_dev(), second.std_dev());
    let theta = (first.variance + second.variance - 2.0 * rho * s1 * s2).max(0.0).sqrt();
    if theta <= f64::EPSILON * (s1 + s2) {
        if first.variance == 0.0 && second.variance == 0.0 {
            return Ok(NormalParams { mean: first.mean.min(second.mean), variance: 0.0 });
        }
        return Err(Error::DegenerateTheta);
    }
    // Moments are taken about the first mean; the variance is shift invariant
    // and this avoids cancelling two large second moments.
    let gap = second.mean - first.mean;
    let delta = gap / theta;
    let (cdf, cdf_neg, pdf) = (std_normal_cdf(delta), std_normal_cdf(-delta), std_normal_pdf(delta));
    let shifted_mean = gap * cdf_neg - theta * pdf;
    let shifted_second = first.variance * cdf + (second.variance + gap * gap) * cdf_neg - gap * theta * pdf;
    let variance = (shifted_second - shifted_mean * shifted_mean).max(0.0);
    Ok(NormalParams { mean: first.mean + shifted_mean, variance })
}

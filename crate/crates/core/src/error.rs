use thiserror::Error;

/// Errors produced by the evaluation, search and allocation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Moment matching cannot produce a binomial: needs `mean > variance >= 0` and `mean > 0`.
    #[error("cannot moment-match a binomial to mean {mean} and variance {variance}")]
    InvalidMoments { mean: f64, variance: f64 },

    /// The spread of `X1 - X2` is zero for operands that are not both point masses.
    #[error("min of two normals is degenerate (theta = 0)")]
    DegenerateTheta,

    #[error("invalid swapping order: {0}")]
    InvalidOrder(String),

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("search space of {count} exceeds the budget of {cap}")]
    BudgetExceeded { count: u128, cap: u128 },

    #[error("infeasible memory budget: {0}")]
    Infeasible(String),

    #[error("time slot is not positive ({slot_s} s): coherence time too short for this path")]
    SlotNonpositive { slot_s: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

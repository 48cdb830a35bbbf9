//! Inverse-LCSZ thresholds: how large a modulus `N` must be so that
//! `prod_{p^r || N} I_{1/p}(r, mu) <= 2^-lambda` for every `N` at least that size.
//!
//! The search is a fractional knapsack over prime powers. Each step `(p, r)`
//! raises the exponent of `p` from `r - 1` to `r`, contributing value `log2 p`
//! and weight `log2(I(r - 1) / I(r))`. Greedy selection in non-increasing
//! density order until the weight reaches `lambda` upper-bounds `log2 t`.

mod analytic;
mod greedy;
mod monotonicity;

use std::collections::hash_map::Entry;
use std::collections::{HashMap, HashSet};

use num_bigint::BigUint;
use num_traits::{Pow, Signed};
use thiserror::Error;

use crate::betafn::ScaledTail;
use crate::exactnum::{log2_ratio, LogInterval};
pub use crate::primes::next_prime;
use crate::primes::is_prime;

pub use analytic::{analytic_corollary, analytic_threshold, default_epsilon};
pub use greedy::{
    greedy_threshold, run_greedy, threshold_table, GreedyRun, PoppedItem, ThresholdResult, MAX_ESCALATIONS,
};
pub use monotonicity::{
    check_density_monotonicity, MonotonicityReport, MonotonicityStatus, MonotonicityViolation,
};

/// Smallest precision the engine accepts.
pub const MIN_PRECISION: u32 = 32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThresholdError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(
        "density order of ({}, {}) and ({}, {}) still ambiguous at {precision} bits",
        first.0, first.1, second.0, second.1
    )]
    PrecisionExhausted {
        first: (u64, u32),
        second: (u64, u32),
        precision: u32,
    },
    #[error("weight enclosure of ({p}, {r}) is not positive at {precision} bits")]
    NonPositiveWeight { p: u64, r: u32, precision: u32 },
    #[error("prime {0} appears more than once")]
    RepeatedPrime(u64),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("epsilon {epsilon} is below log_mu(2) = {minimum} for mu = {mu}")]
    EpsilonTooSmall { mu: u32, epsilon: f64, minimum: f64 },
}

pub(crate) fn check_precision(precision: u32) -> Result<(), ThresholdError> {
    if precision < MIN_PRECISION {
        return Err(ThresholdError::InvalidParameter(format!(
            "precision must be at least {MIN_PRECISION} bits, got {precision}"
        )));
    }
    Ok(())
}

/// One knapsack step: raising the exponent of `p` from `r - 1` to `r`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Item {
    pub p: u64,
    pub r: u32,
    /// `log2 p`.
    pub dval: LogInterval,
    /// `log2(I(r - 1) / I(r))`.
    pub dweight: LogInterval,
    /// `dval / dweight`.
    pub density: LogInterval,
}

impl Item {
    /// Computes the step from an exact tail sequence for `p`.
    pub fn from_tail(tail: &mut ScaledTail, r: u32, precision: u32) -> Result<Self, ThresholdError> {
        let p = tail.p();
        let (num, den) = tail.step_ratio(r);
        let dval = log2_ratio(&BigUint::from(p), &BigUint::from(1u32), precision);
        if num == &den * p {
            // mu = 1: the step ratio is exactly p, so weight and value coincide.
            let density = LogInterval::from_int(1, precision);
            return Ok(Item {
                p,
                r,
                dweight: dval.clone(),
                dval,
                density,
            });
        }
        let dweight = log2_ratio(&num, &den, precision);
        if !dweight.raw_lo().is_positive() {
            return Err(ThresholdError::NonPositiveWeight { p, r, precision });
        }
        let density = dval
            .div_positive(&dweight)
            .expect("value and weight enclosures are positive");
        Ok(Item {
            p,
            r,
            dval,
            dweight,
            density,
        })
    }
}

/// Enclosure of `log2(I_{1/p}(r - 1, mu) / I_{1/p}(r, mu))`, from one log of the exact quotient.
pub fn marginal_weight(p: u64, r: u32, mu: u32, precision: u32) -> Result<LogInterval, ThresholdError> {
    check_step(p, r, mu)?;
    let (num, den) = ScaledTail::new(p, mu).step_ratio(r);
    Ok(log2_ratio(&num, &den, precision))
}

/// Enclosure of `log2 p / marginal_weight(p, r, mu)`.
pub fn marginal_density(p: u64, r: u32, mu: u32, precision: u32) -> Result<LogInterval, ThresholdError> {
    check_step(p, r, mu)?;
    Ok(Item::from_tail(&mut ScaledTail::new(p, mu), r, precision)?.density)
}

fn check_step(p: u64, r: u32, mu: u32) -> Result<(), ThresholdError> {
    if !is_prime(p) {
        return Err(ThresholdError::NotPrime(p));
    }
    if r == 0 || mu == 0 {
        return Err(ThresholdError::InvalidParameter(
            "marginal quantities need r >= 1 and mu >= 1".into(),
        ));
    }
    Ok(())
}

/// Objective and constraint of the threshold maximization for `N = prod p^r`:
/// `(sum r log2 p, sum -log2 I_{1/p}(r, mu))`.
pub fn feasible_value(
    items: &[(u64, u32)],
    mu: u32,
    precision: u32,
) -> Result<(LogInterval, LogInterval), ThresholdError> {
    FeasibilityEvaluator::new(mu, precision).evaluate(items)
}

/// [`feasible_value`] with per-`(p, r)` memoization, for evaluating many candidate moduli.
#[derive(Debug)]
pub struct FeasibilityEvaluator {
    mu: u32,
    precision: u32,
    tails: HashMap<u64, ScaledTail>,
    cache: HashMap<(u64, u32), (LogInterval, LogInterval)>,
}

impl FeasibilityEvaluator {
    pub fn new(mu: u32, precision: u32) -> Self {
        FeasibilityEvaluator {
            mu,
            precision,
            tails: HashMap::new(),
            cache: HashMap::new(),
        }
    }

    pub fn evaluate(&mut self, items: &[(u64, u32)]) -> Result<(LogInterval, LogInterval), ThresholdError> {
        if self.mu == 0 {
            return Err(ThresholdError::InvalidParameter("mu must be at least 1".into()));
        }
        let mut seen = HashSet::new();
        let mut value = LogInterval::zero(self.precision);
        let mut weight = LogInterval::zero(self.precision);
        for &(p, r) in items {
            if !seen.insert(p) {
                return Err(ThresholdError::RepeatedPrime(p));
            }
            if !is_prime(p) {
                return Err(ThresholdError::NotPrime(p));
            }
            if r == 0 {
                continue;
            }
            let (v, w) = self.term(p, r);
            value = &value + &v;
            weight = &weight + &w;
        }
        Ok((value, weight))
    }

    fn term(&mut self, p: u64, r: u32) -> (LogInterval, LogInterval) {
        if let Some(hit) = self.cache.get(&(p, r)) {
            return hit.clone();
        }
        let mu = self.mu;
        let tail = match self.tails.entry(p) {
            Entry::Occupied(e) => e.into_mut(),
            Entry::Vacant(e) => e.insert(ScaledTail::new(p, mu)),
        };
        let pb = BigUint::from(p);
        let value = log2_ratio(&Pow::pow(&pb, r), &BigUint::from(1u32), self.precision);
        // -log2 I(r) = log2(p^(mu + r - 1) / A_r)
        let scale: BigUint = Pow::pow(&pb, mu + r - 1);
        let weight = log2_ratio(&scale, tail.numerator(r), self.precision);
        self.cache.insert((p, r), (value.clone(), weight.clone()));
        (value, weight)
    }
}

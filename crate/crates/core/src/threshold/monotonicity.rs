//! Self-check of the density ordering the greedy enumeration relies on.
//!
//! In `r`, strict decrease of `density(p, r)` is equivalent to strict
//! log-concavity `I(r)^2 > I(r - 1) I(r + 1)`, which is decided exactly on
//! integer tail numerators. In `p`, `density(p, 1)` is compared between
//! consecutive primes through enclosures, refined until they separate.

use std::fmt;

use super::{check_precision, Item, ThresholdError, MAX_ESCALATIONS};
use crate::betafn::ScaledTail;
use crate::exactnum::LogInterval;
use crate::primes::primes_up_to;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MonotonicityViolation {
    /// `density(p, r + 1) >= density(p, r)`.
    NotDecreasingInR { p: u64, r: u32 },
    /// `density(q, 1) > density(p, 1)` for consecutive primes `p < q`.
    IncreasingInP { p: u64, q: u64 },
    /// Enclosures of `density(p, 1)` and `density(q, 1)` never separated.
    Undecided { p: u64, q: u64, precision: u32 },
}

impl fmt::Display for MonotonicityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NotDecreasingInR { p, r } => {
                write!(f, "density({p}, {}) is not below density({p}, {r})", r + 1)
            }
            Self::IncreasingInP { p, q } => {
                write!(f, "density({q}, 1) exceeds density({p}, 1)")
            }
            Self::Undecided { p, q, precision } => write!(
                f,
                "density({p}, 1) and density({q}, 1) not separated at {precision} bits"
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MonotonicityStatus {
    Pass,
    Fail(MonotonicityViolation),
    /// `mu = 1`: every density is exactly 1.
    Inapplicable,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonotonicityReport {
    pub mu: u32,
    pub p_max: u64,
    pub r_max: u32,
    pub primes_checked: usize,
    pub comparisons: usize,
    pub status: MonotonicityStatus,
}

impl MonotonicityReport {
    pub fn passed(&self) -> bool {
        self.status == MonotonicityStatus::Pass
    }
}

/// Checks `density(p, r) > density(p, r + 1)` for every prime `p <= p_max`
/// and `1 <= r < r_max`, and `density(p, 1) >= density(q, 1)` for consecutive
/// primes `p < q <= p_max`. Stops at the first violation.
pub fn check_density_monotonicity(
    mu: u32,
    p_max: u64,
    r_max: u32,
    precision: u32,
) -> Result<MonotonicityReport, ThresholdError> {
    check_precision(precision)?;
    if mu == 0 {
        return Err(ThresholdError::InvalidParameter("mu must be at least 1".into()));
    }
    let mut report = MonotonicityReport {
        mu,
        p_max,
        r_max,
        primes_checked: 0,
        comparisons: 0,
        status: MonotonicityStatus::Pass,
    };
    if mu == 1 {
        report.status = MonotonicityStatus::Inapplicable;
        return Ok(report);
    }

    let mut previous: Option<(u64, LogInterval)> = None;
    for p in primes_up_to(p_max) {
        let mut tail = ScaledTail::new(p, mu);
        for r in 1..r_max {
            report.comparisons += 1;
            if !tail.strictly_log_concave_at(r) {
                report.status = MonotonicityStatus::Fail(MonotonicityViolation::NotDecreasingInR { p, r });
                return Ok(report);
            }
        }

        let first = Item::from_tail(&mut tail, 1, precision)?.density;
        if let Some((prev_p, prev_density)) = previous.take() {
            report.comparisons += 1;
            if let Some(v) = compare_first_steps(mu, prev_p, prev_density, p, first.clone(), precision)? {
                report.status = MonotonicityStatus::Fail(v);
                return Ok(report);
            }
        }
        previous = Some((p, first));
        report.primes_checked += 1;
    }
    Ok(report)
}

/// `None` when `density(p, 1) >= density(q, 1)` is established.
fn compare_first_steps(
    mu: u32,
    p: u64,
    mut dp: LogInterval,
    q: u64,
    mut dq: LogInterval,
    precision: u32,
) -> Result<Option<MonotonicityViolation>, ThresholdError> {
    let limit = precision << MAX_ESCALATIONS;
    let mut current = precision;
    loop {
        if dp.certainly_gt(&dq) || (dp.is_point() && dp.same_endpoints(&dq)) {
            return Ok(None);
        }
        if dq.certainly_gt(&dp) {
            return Ok(Some(MonotonicityViolation::IncreasingInP { p, q }));
        }
        if current >= limit {
            return Ok(Some(MonotonicityViolation::Undecided { p, q, precision: current }));
        }
        current *= 2;
        dp = Item::from_tail(&mut ScaledTail::new(p, mu), 1, current)?.density;
        dq = Item::from_tail(&mut ScaledTail::new(q, mu), 1, current)?.density;
    }
}

//! Closed-form threshold bound `4 mu^(2 + eps) + (1 + 1/eps) lambda`.

use num_bigint::BigUint;

use super::ThresholdError;
use crate::exactnum::{log2_ratio, Rational};

/// Relative slack when comparing a caller's epsilon against `log_mu 2`, so that
/// a value computed as `ln 2 / ln mu` (or typed to full f64 precision) passes.
const EPSILON_SLACK: f64 = 1e-12;

/// `log_mu 2`, the smallest epsilon the bound admits.
pub fn default_epsilon(mu: u32) -> f64 {
    std::f64::consts::LN_2 / (mu as f64).ln()
}

fn up(x: f64) -> f64 {
    x.next_up()
}

/// `4 mu^(2 + eps) + (1 + 1/eps) lambda`, every intermediate rounded upward.
pub fn analytic_threshold(mu: u32, lambda: u32, epsilon: f64) -> Result<f64, ThresholdError> {
    if mu < 2 {
        return Err(ThresholdError::InvalidParameter(
            "the analytic bound needs mu >= 2".into(),
        ));
    }
    let minimum = default_epsilon(mu);
    if !(epsilon.is_finite() && epsilon >= minimum * (1.0 - EPSILON_SLACK)) {
        return Err(ThresholdError::EpsilonTooSmall { mu, epsilon, minimum });
    }
    let log2_mu = up((mu as f64).log2());
    let power = up(up(up(2.0 + epsilon) * log2_mu).exp2());
    let size_term = up(4.0 * power);
    let lambda_term = up(up(1.0 + up(1.0 / epsilon)) * lambda as f64);
    Ok(up(size_term + lambda_term))
}

/// The `eps = log_mu 2` instance, `8 mu^2 + log2(2 mu) lambda`, as an upper
/// bound taken from an exact log enclosure. Exact when `mu` is a power of two.
pub fn analytic_corollary(mu: u32, lambda: u32) -> f64 {
    let mu = mu as u64;
    let log_term = log2_ratio(&BigUint::from(2 * mu), &BigUint::from(1u32), 128).scale(lambda as u64);
    let size_term = Rational::from_integer((8 * mu * mu).into());
    let exact_hi = size_term + log_term.hi_rational();
    let total = 8.0 * (mu * mu) as f64 + log_term.hi_f64();
    // f64 conversion rounds to nearest; step up if it landed below the endpoint.
    if Rational::from_float(total).is_some_and(|t| t < exact_hi) {
        total.next_up()
    } else {
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mu_two_eps_one() {
        let v = analytic_threshold(2, 40, 1.0).unwrap();
        assert!(v >= 112.0 && v - 112.0 < 1e-9);
        assert_eq!(analytic_corollary(2, 40), 112.0);
    }

    #[test]
    fn mu_twenty_lambda_120() {
        let v = analytic_threshold(20, 120, default_epsilon(20)).unwrap();
        assert_eq!(v.round(), 3839.0);
        assert_eq!(v.ceil(), 3839.0);
        let c = analytic_corollary(20, 120);
        assert!((c - v).abs() < 1e-6);
        assert!(c >= 3200.0 + 120.0 * 40f64.log2());
    }

    #[test]
    fn epsilon_precondition() {
        let err = analytic_threshold(20, 120, 0.1).unwrap_err();
        assert!(matches!(err, ThresholdError::EpsilonTooSmall { mu: 20, .. }));
        assert!(analytic_threshold(1, 10, 1.0).is_err());
        assert!(analytic_threshold(4, 10, f64::NAN).is_err());
        assert!(analytic_threshold(4, 10, 0.5).is_ok());
    }

    #[test]
    fn larger_epsilon_trades_size_for_lambda() {
        let a = analytic_threshold(10, 1000, default_epsilon(10)).unwrap();
        let b = analytic_threshold(10, 1000, 1.0).unwrap();
        // 4 * 10^3 + 2 * 1000 = 6000
        assert!((b - 6000.0).abs() < 1e-9);
        assert!(a < b);
    }
}

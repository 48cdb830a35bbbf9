//! The regularized incomplete beta function at integer arguments.
//!
//! For `0 < eps < 1`, `k >= 0` and `mu >= 1`,
//! `I_eps(k, mu) = 1 - (1 - eps)^mu * sum_{j < k} C(mu + j - 1, j) eps^j`,
//! which is also the tail `P[Z_1 + ... + Z_mu >= k]` of a sum of i.i.d.
//! geometric variables with `P[Z >= j] = eps^j`.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Pow, Signed, Zero};
use thiserror::Error;

use crate::exactnum::{binomial, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BetaError {
    #[error("eps must lie strictly between 0 and 1, got {0}")]
    EpsOutOfRange(String),
    #[error("mu must be at least 1")]
    ZeroMu,
    #[error("{0} is not a valid prime modulus")]
    NotPrime(u64),
}

/// Validated arguments `(eps, k, mu)` of `I_eps(k, mu)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BetaParams {
    eps: Rational,
    k: u32,
    mu: u32,
}

impl BetaParams {
    pub fn new(eps: Rational, k: u32, mu: u32) -> Result<Self, BetaError> {
        if !(eps.is_positive() && eps < Rational::one()) {
            return Err(BetaError::EpsOutOfRange(eps.to_string()));
        }
        if mu == 0 {
            return Err(BetaError::ZeroMu);
        }
        Ok(BetaParams { eps, k, mu })
    }

    /// `eps = 1/p`. Any `p >= 2` is accepted; thresholds only use primes.
    pub fn reciprocal(p: u64, k: u32, mu: u32) -> Result<Self, BetaError> {
        if p < 2 {
            return Err(BetaError::NotPrime(p));
        }
        Self::new(Rational::new(BigInt::one(), BigInt::from(p)), k, mu)
    }

    pub fn eps(&self) -> &Rational {
        &self.eps
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn mu(&self) -> u32 {
        self.mu
    }
}

fn eps_of(p: u64) -> Rational {
    Rational::new(BigInt::one(), BigInt::from(p))
}

fn rat(n: u64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Exact `I_eps(k, mu)` from the finite complement form.
pub fn reg_beta(params: &BetaParams) -> Rational {
    let BetaParams { eps, k, mu } = params;
    if *k == 0 {
        return Rational::one();
    }
    let mut partial = Rational::zero();
    let mut eps_pow = Rational::one();
    for j in 0..*k as u64 {
        let c = binomial(*mu as u64 + j - 1, j);
        partial += Rational::from_integer(BigInt::from(c)) * &eps_pow;
        eps_pow *= eps;
    }
    let keep: Rational = Pow::pow(Rational::one() - eps, *mu);
    Rational::one() - keep * partial
}

/// Convolution oracle for `P[Z_1 + ... + Z_mu >= r]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NegBinTail {
    /// `P[Z_1 + ... + Z_mu = s]` for `s < r`.
    pub pmf: Vec<Rational>,
    /// `P[Z_1 + ... + Z_mu >= r]`.
    pub tail: Rational,
}

/// Tail of a sum of `mu` i.i.d. geometric variables with `P[Z >= k] = p^-k`,
/// computed by convolving the pmf `(1 - 1/p) p^-k` over the support `[0, r)`.
///
/// Shares no code with [`reg_beta`]: no binomial coefficients appear.
pub fn negbin_ccdf_oracle(p: u64, r: u32, mu: u32) -> Rational {
    negbin_tail(p, r, mu).tail
}

pub fn negbin_tail(p: u64, r: u32, mu: u32) -> NegBinTail {
    assert!(p >= 2 && mu >= 1, "negbin_tail needs p >= 2 and mu >= 1");
    let len = r as usize;
    let eps = eps_of(p);
    let mut geometric = Vec::with_capacity(len);
    let mut mass = Rational::one() - &eps;
    for _ in 0..len {
        geometric.push(mass.clone());
        mass *= &eps;
    }
    // Point mass at zero: the empty sum.
    let mut dist = vec![Rational::zero(); len];
    if len > 0 {
        dist[0] = Rational::one();
    }
    for _ in 0..mu {
        let mut next = vec![Rational::zero(); len];
        for (s, ds) in dist.iter().enumerate() {
            if ds.is_zero() {
                continue;
            }
            for (t, gt) in geometric.iter().enumerate().take(len - s) {
                next[s + t] += ds * gt;
            }
        }
        dist = next;
    }
    let head: Rational = dist.iter().sum();
    NegBinTail {
        tail: Rational::one() - head,
        pmf: dist,
    }
}

/// The piecewise closed-form upper bound on `I_{1/p}(r, mu)`.
///
/// When both `r >= 2 mu` and `p >= 2 mu` apply, the smaller bound is returned.
pub fn corollary_bound(p: u64, r: u32, mu: u32) -> Rational {
    let mut best: Option<Rational> = None;
    if r >= 2 * mu {
        let num: BigInt = Pow::pow(BigInt::from(r), mu);
        let den: BigInt = Pow::pow(BigInt::from(p), r);
        best = Some(Rational::new(num, den));
    }
    if p >= 2 * mu as u64 {
        let b: Rational = Pow::pow(Rational::new(BigInt::from(mu), BigInt::from(p)), r);
        best = Some(match best {
            Some(a) if a <= b => a,
            _ => b,
        });
    }
    best.unwrap_or_else(Rational::one)
}

/// Outcome of checking one closed-form bound against the exact value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoundCheck {
    /// `bound - I >= 0`; `gap` is the exact difference.
    Holds { gap: Rational },
    Violated { gap: Rational },
    /// Parameters outside the bound's hypotheses.
    Inapplicable,
}

impl BoundCheck {
    pub fn holds(&self) -> Option<bool> {
        match self {
            BoundCheck::Holds { .. } => Some(true),
            BoundCheck::Violated { .. } => Some(false),
            BoundCheck::Inapplicable => None,
        }
    }

    fn compare(bound: Rational, value: Rational) -> Self {
        let gap = bound - value;
        if gap.is_negative() {
            BoundCheck::Violated { gap }
        } else {
            BoundCheck::Holds { gap }
        }
    }
}

/// `I_eps(k, mu) <= (eps mu)^k`, applicable when `eps mu <= 1/2`.
pub fn lemma1_bound_holds(params: &BetaParams) -> BoundCheck {
    let eps_mu = params.eps() * rat(params.mu() as u64);
    if eps_mu > Rational::new(BigInt::one(), BigInt::from(2)) {
        return BoundCheck::Inapplicable;
    }
    let bound: Rational = Pow::pow(eps_mu, params.k());
    BoundCheck::compare(bound, reg_beta(params))
}

/// `I_eps(k, mu) <= eps^k k^mu`, applicable when `k >= 2 mu` and `eps <= 1/2`.
pub fn lemma2_bound_holds(params: &BetaParams) -> BoundCheck {
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    if params.k() < 2 * params.mu() || *params.eps() > half {
        return BoundCheck::Inapplicable;
    }
    let eps_k: Rational = Pow::pow(params.eps().clone(), params.k());
    let k_mu: BigInt = Pow::pow(BigInt::from(params.k()), params.mu());
    let bound = eps_k * Rational::from_integer(k_mu);
    BoundCheck::compare(bound, reg_beta(params))
}

/// Integer numerators of `I_{1/p}(k, mu)` on the scale `p^(mu + k - 1)`.
///
/// `A_0 = p^(mu - 1)` and `A_{k+1} = p A_k - (p - 1)^mu C(mu + k - 1, k)`, so
/// `I(k) = A_k / p^(mu + k - 1)`. Consecutive ratios and log-concavity checks
/// then reduce to integer arithmetic:
/// `I(k-1) / I(k) = p A_{k-1} / A_k` and
/// `I(k)^2 > I(k-1) I(k+1)  <=>  A_k^2 > A_{k-1} A_{k+1}`.
#[derive(Clone, Debug)]
pub struct ScaledTail {
    p: u64,
    mu: u32,
    drop_factor: BigUint,
    next_binom: BigUint,
    numerators: Vec<BigUint>,
}

impl ScaledTail {
    pub fn new(p: u64, mu: u32) -> Self {
        assert!(p >= 2 && mu >= 1, "ScaledTail needs p >= 2 and mu >= 1");
        let pb = BigUint::from(p);
        ScaledTail {
            p,
            mu,
            drop_factor: Pow::pow(BigUint::from(p - 1), mu),
            next_binom: BigUint::one(),
            numerators: vec![Pow::pow(pb, mu - 1)],
        }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn mu(&self) -> u32 {
        self.mu
    }

    fn extend_to(&mut self, k: u32) {
        while self.numerators.len() <= k as usize {
            let j = (self.numerators.len() - 1) as u64;
            let last = self.numerators.last().expect("seeded with A_0");
            let next = last * self.p - &self.drop_factor * &self.next_binom;
            self.numerators.push(next);
            // C(mu + j, j + 1) = C(mu + j - 1, j) (mu + j) / (j + 1)
            self.next_binom = &self.next_binom * (self.mu as u64 + j) / (j + 1);
        }
    }

    /// `A_k`.
    pub fn numerator(&mut self, k: u32) -> &BigUint {
        self.extend_to(k);
        &self.numerators[k as usize]
    }

    /// `I_{1/p}(k, mu)` as a reduced rational.
    pub fn value(&mut self, k: u32) -> Rational {
        let num = self.numerator(k).clone();
        let den: BigUint = Pow::pow(BigUint::from(self.p), self.mu + k - 1);
        Rational::new(num.into(), den.into())
    }

    /// `I(r - 1) / I(r)` as an unreduced `(numerator, denominator)` pair, `r >= 1`.
    pub fn step_ratio(&mut self, r: u32) -> (BigUint, BigUint) {
        assert!(r >= 1, "step ratio needs r >= 1");
        self.extend_to(r);
        let prev = &self.numerators[r as usize - 1] * self.p;
        (prev, self.numerators[r as usize].clone())
    }

    /// Whether `I(r)^2 > I(r - 1) I(r + 1)`, exactly, for `r >= 1`.
    pub fn strictly_log_concave_at(&mut self, r: u32) -> bool {
        assert!(r >= 1, "log-concavity is checked for r >= 1");
        self.extend_to(r + 1);
        let a = &self.numerators;
        let r = r as usize;
        &a[r] * &a[r] > &a[r - 1] * &a[r + 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    fn params(n: i64, d: i64, k: u32, mu: u32) -> BetaParams {
        BetaParams::new(q(n, d), k, mu).unwrap()
    }

    #[test]
    fn reg_beta_examples() {
        assert_eq!(reg_beta(&params(1, 2, 3, 1)), q(1, 8));
        assert_eq!(reg_beta(&params(1, 3, 0, 4)), q(1, 1));
        assert_eq!(reg_beta(&params(1, 2, 2, 2)), q(1, 2));
    }

    #[test]
    fn params_validation() {
        assert!(matches!(
            BetaParams::new(q(0, 1), 1, 1),
            Err(BetaError::EpsOutOfRange(_))
        ));
        assert!(BetaParams::new(q(1, 1), 1, 1).is_err());
        assert_eq!(BetaParams::new(q(1, 2), 1, 0), Err(BetaError::ZeroMu));
        assert_eq!(BetaParams::reciprocal(1, 1, 1), Err(BetaError::NotPrime(1)));
    }

    #[test]
    fn special_values() {
        for p in [2u64, 3, 5, 7, 11] {
            for mu in 1..=6 {
                let eps = eps_of(p);
                let keep: Rational = Pow::pow(Rational::one() - &eps, mu);
                let one = reg_beta(&BetaParams::reciprocal(p, 1, mu).unwrap());
                assert_eq!(one, Rational::one() - keep);
            }
            for k in 0..10 {
                let v = reg_beta(&BetaParams::reciprocal(p, k, 1).unwrap());
                assert_eq!(v, Pow::pow(eps_of(p), k));
            }
        }
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(negbin_ccdf_oracle(2, 1, 1), q(1, 2));
        assert_eq!(negbin_ccdf_oracle(2, 2, 2), q(1, 2));
        assert_eq!(negbin_ccdf_oracle(3, 0, 5), q(1, 1));
    }

    #[test]
    fn oracle_matches_reg_beta_on_grid() {
        for p in [2u64, 3, 5, 7] {
            for r in 0..=12 {
                for mu in 1..=6 {
                    let exact = reg_beta(&BetaParams::reciprocal(p, r, mu).unwrap());
                    assert_eq!(exact, negbin_ccdf_oracle(p, r, mu), "p={p} r={r} mu={mu}");
                }
            }
        }
    }

    #[test]
    fn oracle_pmf_and_tail_partition_unity() {
        for (p, r, mu) in [(2u64, 7u32, 3u32), (5, 12, 6), (3, 1, 1), (7, 0, 2)] {
            let t = negbin_tail(p, r, mu);
            assert_eq!(t.pmf.len(), r as usize);
            let total: Rational = t.pmf.iter().sum::<Rational>() + &t.tail;
            assert_eq!(total, Rational::one());
            assert!(t.pmf.iter().all(|m| !m.is_negative()));
        }
    }

    #[test]
    fn monotone_in_each_argument() {
        let grid_eps = [q(1, 7), q(1, 5), q(1, 3), q(1, 2)];
        for (i, eps) in grid_eps.iter().enumerate() {
            for mu in 1..=6u32 {
                for k in 0..=12u32 {
                    let here = reg_beta(&BetaParams::new(eps.clone(), k, mu).unwrap());
                    assert!(here >= Rational::zero() && here <= Rational::one());
                    let next_k = reg_beta(&BetaParams::new(eps.clone(), k + 1, mu).unwrap());
                    assert!(next_k <= here, "k");
                    let next_mu = reg_beta(&BetaParams::new(eps.clone(), k, mu + 1).unwrap());
                    assert!(next_mu >= here, "mu");
                    if let Some(bigger) = grid_eps.get(i + 1) {
                        let next_eps = reg_beta(&BetaParams::new(bigger.clone(), k, mu).unwrap());
                        assert!(next_eps >= here, "eps");
                    }
                }
            }
        }
    }

    #[test]
    fn closed_form_bound_examples() {
        assert_eq!(corollary_bound(5, 1, 2), q(2, 5));
        assert_eq!(corollary_bound(2, 4, 2), q(1, 1));
        assert_eq!(corollary_bound(2, 1, 2), q(1, 1));
        // Both branches apply: 6^3 / 11^6 < (3/11)^6.
        assert_eq!(corollary_bound(11, 6, 3), q(216, 1_771_561));
    }

    #[test]
    fn closed_form_bound_sound_on_grid() {
        for p in crate::primes::primes_up_to(97) {
            let mut tail_by_mu: Vec<ScaledTail> = (1..=10).map(|mu| ScaledTail::new(p, mu)).collect();
            for (i, tail) in tail_by_mu.iter_mut().enumerate() {
                let mu = i as u32 + 1;
                for r in 0..=30 {
                    assert!(tail.value(r) <= corollary_bound(p, r, mu), "p={p} r={r} mu={mu}");
                }
            }
        }
    }

    #[test]
    fn bound_check_examples() {
        assert_eq!(lemma1_bound_holds(&params(1, 4, 3, 2)).holds(), Some(true));
        assert_eq!(lemma1_bound_holds(&params(1, 2, 0, 1)).holds(), Some(true));
        match lemma1_bound_holds(&params(1, 5, 2, 2)) {
            // (2/5)^2 - I_{1/5}(2, 2) = 4/25 - 13/125
            BoundCheck::Holds { gap } => assert_eq!(gap, q(7, 125)),
            other => panic!("{other:?}"),
        }
        assert_eq!(reg_beta(&params(1, 5, 2, 2)), q(13, 125));
        assert_eq!(lemma1_bound_holds(&params(1, 2, 3, 2)), BoundCheck::Inapplicable);

        assert_eq!(lemma2_bound_holds(&params(1, 2, 4, 2)).holds(), Some(true));
        assert_eq!(lemma2_bound_holds(&params(1, 2, 2, 1)).holds(), Some(true));
        assert_eq!(lemma2_bound_holds(&params(1, 3, 6, 3)).holds(), Some(true));
        assert_eq!(lemma2_bound_holds(&params(1, 3, 5, 3)), BoundCheck::Inapplicable);
        assert_eq!(lemma2_bound_holds(&params(2, 3, 6, 3)), BoundCheck::Inapplicable);
    }

    #[test]
    fn eps_mu_half_boundary_included() {
        // eps * mu = 1/2 exactly.
        let check = lemma1_bound_holds(&params(1, 4, 5, 2));
        assert_eq!(check.holds(), Some(true));
    }

    #[test]
    fn scaled_tail_matches_reg_beta() {
        for p in [2u64, 3, 13, 101] {
            for mu in 1..=8 {
                let mut tail = ScaledTail::new(p, mu);
                for k in 0..=20 {
                    let exact = reg_beta(&BetaParams::reciprocal(p, k, mu).unwrap());
                    assert_eq!(tail.value(k), exact, "p={p} mu={mu} k={k}");
                }
            }
        }
    }

    #[test]
    fn step_ratio_is_quotient_of_values() {
        let mut tail = ScaledTail::new(7, 4);
        for r in 1..15 {
            let (n, d) = tail.step_ratio(r);
            let ratio = Rational::new(n.into(), d.into());
            assert_eq!(ratio, tail.value(r - 1) / tail.value(r));
        }
    }

    #[test]
    fn log_concavity_on_grid() {
        for p in crate::primes::primes_up_to(97) {
            for mu in 2..=10 {
                let mut tail = ScaledTail::new(p, mu);
                for r in 1..=30 {
                    let i_prev = tail.value(r - 1);
                    let i_here = tail.value(r);
                    let i_next = tail.value(r + 1);
                    let through_rationals = &i_here * &i_here >= &i_prev * &i_next;
                    assert!(through_rationals, "p={p} mu={mu} r={r}");
                    assert!(tail.strictly_log_concave_at(r));
                }
            }
        }
    }

    #[test]
    fn mu_one_is_log_linear() {
        // I(r, 1) = p^-r makes every step ratio exactly p.
        let mut tail = ScaledTail::new(5, 1);
        for r in 1..10 {
            let (n, d) = tail.step_ratio(r);
            assert_eq!(n, d * 5u32);
            assert!(!tail.strictly_log_concave_at(r));
        }
    }
}

//! Brute-force ground truth for the multilinear composite Schwartz-Zippel bound
//!
//! `P_{x <- [0, m)^mu}[f(x) = 0 mod N] <= mu/m + prod_{p^r || N} I_{1/p}(r, mu)`
//!
//! for `mu`-linear integer polynomials `f` whose content is coprime to `N`.

mod montecarlo;

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Pow, Zero};
use thiserror::Error;

use crate::betafn::{reg_beta, BetaParams};
use crate::exactnum::Rational;
use crate::primes;

pub use montecarlo::{monte_carlo_prob, CounterRng, MonteCarloEstimate, CONFIDENCE};

/// Largest box `m^mu` enumerated point by point.
pub const MAX_BOX_POINTS: u64 = 100_000_000;
/// Largest modulus accepted by the root counter.
pub const MAX_COUNT_MODULUS: u64 = 1 << 32;
/// Largest number of coefficient vectors `N^(2^mu)` the exhaustive check enumerates.
pub const MAX_COEFF_VECTORS: u64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{what} needs about {estimate} evaluations, above the limit of {limit}")]
    ScaleExceeded {
        what: &'static str,
        estimate: String,
        limit: u64,
    },
    #[error("invalid polynomial: {0}")]
    InvalidPolynomial(String),
}

/// `sum_b c_b prod_{i in b} X_{i+1}` where bit `i` of index `b` selects `X_{i+1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultilinearPoly {
    mu: u32,
    coeffs: Vec<i64>,
}

impl MultilinearPoly {
    pub fn new(mu: u32, coeffs: Vec<i64>) -> Result<Self, OracleError> {
        if mu == 0 || mu > 24 {
            return Err(OracleError::InvalidPolynomial(format!(
                "mu must be in 1..=24, got {mu}"
            )));
        }
        if coeffs.len() != 1usize << mu {
            return Err(OracleError::InvalidPolynomial(format!(
                "{} coefficients given, {} expected",
                coeffs.len(),
                1usize << mu
            )));
        }
        Ok(MultilinearPoly { mu, coeffs })
    }

    /// Builds from `(monomial mask, coefficient)` pairs; repeated masks add up.
    pub fn from_terms(mu: u32, terms: &[(usize, i64)]) -> Result<Self, OracleError> {
        let mut coeffs = vec![0i64; 1usize << mu.min(24)];
        for &(mask, c) in terms {
            let slot = coeffs.get_mut(mask).ok_or_else(|| {
                OracleError::InvalidPolynomial(format!("monomial mask {mask} out of range"))
            })?;
            *slot += c;
        }
        Self::new(mu, coeffs)
    }

    /// `X_1 X_2 ... X_mu`.
    pub fn product(mu: u32) -> Result<Self, OracleError> {
        Self::from_terms(mu, &[((1usize << mu) - 1, 1)])
    }

    pub fn mu(&self) -> u32 {
        self.mu
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    /// gcd of all coefficients; 0 for the zero polynomial.
    pub fn content(&self) -> u64 {
        self.coeffs
            .iter()
            .fold(0u64, |g, &c| g.gcd(&c.unsigned_abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    /// `f(x) mod n`, evaluated term by term.
    pub fn eval_mod(&self, x: &[u64], n: u64) -> u64 {
        assert_eq!(x.len(), self.mu as usize, "point dimension");
        let n128 = n as u128;
        let mut acc: u128 = 0;
        for (mask, &c) in self.coeffs.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let mut term = c.rem_euclid(n as i64) as u128;
            for (i, &xi) in x.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    term = term * (xi as u128 % n128) % n128;
                }
            }
            acc = (acc + term) % n128;
        }
        acc as u64
    }

    /// Relabels variables: `X_{i+1}` of `self` becomes `X_{perm[i]+1}` of the result.
    pub fn permute_variables(&self, perm: &[usize]) -> Result<Self, OracleError> {
        let mu = self.mu as usize;
        let mut seen = vec![false; mu];
        if perm.len() != mu || perm.iter().any(|&j| j >= mu || std::mem::replace(&mut seen[j], true)) {
            return Err(OracleError::InvalidPolynomial("not a permutation".into()));
        }
        let mut coeffs = vec![0i64; self.coeffs.len()];
        for (mask, &c) in self.coeffs.iter().enumerate() {
            let image = (0..mu)
                .filter(|&i| mask >> i & 1 == 1)
                .fold(0usize, |acc, i| acc | 1 << perm[i]);
            coeffs[image] = c;
        }
        Self::new(self.mu, coeffs)
    }
}

impl fmt::Display for MultilinearPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut wrote = false;
        for (mask, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            let vars: Vec<String> = (0..self.mu as usize)
                .filter(|&i| mask >> i & 1 == 1)
                .map(|i| format!("X{}", i + 1))
                .collect();
            let sign = if c < 0 { "-" } else { "+" };
            if wrote {
                write!(f, " {sign} ")?;
            } else if c < 0 {
                write!(f, "-")?;
            }
            let mag = c.unsigned_abs();
            match (mag, vars.is_empty()) {
                (_, true) => write!(f, "{mag}")?,
                (1, false) => write!(f, "{}", vars.join("*"))?,
                _ => write!(f, "{mag}*{}", vars.join("*"))?,
            }
            wrote = true;
        }
        if !wrote {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// Prime factorization with strictly increasing primes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factorization {
    pairs: Vec<(u64, u32)>,
}

impl Factorization {
    pub fn pairs(&self) -> &[(u64, u32)] {
        &self.pairs
    }

    pub fn modulus(&self) -> BigUint {
        self.pairs
            .iter()
            .fold(BigUint::one(), |acc, &(p, r)| acc * Pow::pow(BigUint::from(p), r))
    }
}

impl fmt::Display for Factorization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, &(p, r)) in self.pairs.iter().enumerate() {
            if i > 0 {
                write!(f, " * ")?;
            }
            if r == 1 {
                write!(f, "{p}")?;
            } else {
                write!(f, "{p}^{r}")?;
            }
        }
        Ok(())
    }
}

pub fn factorize(n: u64) -> Result<Factorization, OracleError> {
    if n < 2 {
        return Err(OracleError::Domain(format!("cannot factor {n}; need N >= 2")));
    }
    Ok(Factorization {
        pairs: primes::factor(n),
    })
}

pub fn is_coprime_poly(f: &MultilinearPoly, n: u64) -> bool {
    f.content().gcd(&n) == 1
}

fn box_points(m: u64, mu: u32) -> Option<u64> {
    m.checked_pow(mu)
}

fn check_box(n: u64, m: u64, mu: u32) -> Result<u64, OracleError> {
    if !(2..=MAX_COUNT_MODULUS).contains(&n) {
        return Err(OracleError::Domain(format!(
            "modulus must lie in [2, 2^32], got {n}"
        )));
    }
    if m < 2 {
        return Err(OracleError::Domain(format!("box side must exceed 1, got {m}")));
    }
    match box_points(m, mu) {
        Some(points) if points <= MAX_BOX_POINTS => Ok(points),
        _ => Err(OracleError::ScaleExceeded {
            what: "root counting",
            estimate: format!("{m}^{mu} = {}", Pow::pow(BigUint::from(m), mu)),
            limit: MAX_BOX_POINTS,
        }),
    }
}

/// `|{x in [0, m)^mu : f(x) = 0 mod n}|` by exhaustive odometer evaluation.
///
/// Fixing `X_1 = x` turns the `2^mu` coefficients into `2^(mu-1)` coefficients
/// `even + x * odd`; stepping `x` adds `odd`. Each level is updated in place,
/// so the innermost axis costs one addition per point.
pub fn count_zeros(f: &MultilinearPoly, n: u64, m: u64) -> Result<u64, OracleError> {
    check_box(n, m, f.mu)?;
    let n_i = n as i64;
    let mut levels: Vec<Vec<u64>> = Vec::with_capacity(f.mu as usize + 1);
    levels.push(f.coeffs.iter().map(|&c| c.rem_euclid(n_i) as u64).collect());
    for i in 1..=f.mu as usize {
        levels.push(vec![0; f.coeffs.len() >> i]);
    }
    Ok(count_level(&mut levels, 0, m, n))
}

fn count_level(levels: &mut [Vec<u64>], depth: usize, m: u64, n: u64) -> u64 {
    if depth + 1 == levels.len() {
        return (levels[depth][0] == 0) as u64;
    }
    if depth + 2 == levels.len() {
        // Last variable: value(x) = even + x * odd, stepped by addition.
        let (mut value, step) = (levels[depth][0], levels[depth][1]);
        let mut zeros = 0;
        for _ in 0..m {
            zeros += (value == 0) as u64;
            value = add_mod(value, step, n);
        }
        return zeros;
    }
    let (head, tail) = levels.split_at_mut(depth + 1);
    for (b, slot) in tail[0].iter_mut().enumerate() {
        *slot = head[depth][2 * b];
    }
    let mut zeros = 0;
    for _ in 0..m {
        zeros += count_level(levels, depth + 1, m, n);
        let (head, tail) = levels.split_at_mut(depth + 1);
        for (b, slot) in tail[0].iter_mut().enumerate() {
            *slot = add_mod(*slot, head[depth][2 * b + 1], n);
        }
    }
    zeros
}

fn add_mod(a: u64, b: u64, n: u64) -> u64 {
    let s = a as u128 + b as u128;
    (s % n as u128) as u64
}

/// `mu/m + prod_{p^r || N} I_{1/p}(r, mu)`.
pub fn lcsz_bound(n: u64, m: u64, mu: u32) -> Result<Rational, OracleError> {
    if m < 2 || mu == 0 {
        return Err(OracleError::Domain("need m > 1 and mu >= 1".into()));
    }
    Ok(distribution_term(n, mu)? + Rational::new(BigInt::from(mu), BigInt::from(m)))
}

/// `prod_{p^r || N} I_{1/p}(r, mu)`, the `N`-dependent part of the bound.
pub fn distribution_term(n: u64, mu: u32) -> Result<Rational, OracleError> {
    let fact = factorize(n)?;
    Ok(fact
        .pairs()
        .iter()
        .map(|&(p, r)| reg_beta(&BetaParams::reciprocal(p, r, mu).expect("prime p >= 2, mu >= 1")))
        .product())
}

/// `P_{x <- [0, N)^mu}[x_1 ... x_mu = 0 mod N]`.
///
/// Counts exhaustively when `N^mu` is within [`MAX_BOX_POINTS`], otherwise
/// counts by valuation classes.
pub fn product_poly_prob(n: u64, mu: u32) -> Result<Rational, OracleError> {
    if n < 2 || mu == 0 {
        return Err(OracleError::Domain("need N >= 2 and mu >= 1".into()));
    }
    match box_points(n, mu) {
        Some(points) if points <= MAX_BOX_POINTS && n <= MAX_COUNT_MODULUS => {
            let f = MultilinearPoly::product(mu)?;
            let zeros = count_zeros(&f, n, n)?;
            Ok(Rational::new(BigInt::from(zeros), BigInt::from(points)))
        }
        _ => product_poly_prob_by_classes(n, mu),
    }
}

/// [`product_poly_prob`] by counting valuation classes.
///
/// By CRT the residues modulo each `p^r || N` are independent and uniform. For
/// `x` uniform mod `p^r`, `min(v_p(x), r) = k` for `p^(r-k) - p^(r-k-1)` values
/// when `k < r` and for one value when `k = r`; the product vanishes mod `p^r`
/// iff the capped valuations sum to at least `r`.
pub fn product_poly_prob_by_classes(n: u64, mu: u32) -> Result<Rational, OracleError> {
    let fact = factorize(n)?;
    let mut prob = Rational::one();
    for &(p, r) in fact.pairs() {
        let pb = BigUint::from(p);
        let r = r as usize;
        let class: Vec<BigUint> = (0..r)
            .map(|k| Pow::pow(&pb, (r - k) as u32) - Pow::pow(&pb, (r - k - 1) as u32))
            .collect();
        // below[s]: tuples whose capped valuations sum to s < r.
        let mut below = vec![BigUint::zero(); r];
        below[0] = BigUint::one();
        for _ in 0..mu {
            let mut next = vec![BigUint::zero(); r];
            for (s, count) in below.iter().enumerate() {
                if count.is_zero() {
                    continue;
                }
                for (k, size) in class.iter().enumerate().take(r - s) {
                    next[s + k] += count * size;
                }
            }
            below = next;
        }
        let total: BigUint = Pow::pow(&pb, (r as u32) * mu);
        let nonzero: BigUint = below.iter().sum();
        prob *= Rational::new((&total - nonzero).into(), total.into());
    }
    Ok(prob)
}

/// Worst case found for one box side `m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoxSummary {
    pub m: u64,
    pub bound: Rational,
    /// `max zeros / m^mu` over coprime polynomials.
    pub max_ratio: Rational,
    /// First polynomial, in enumeration order, attaining `max_ratio`.
    pub maximizer: MultilinearPoly,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LcszViolation {
    pub poly: MultilinearPoly,
    pub m: u64,
    pub ratio: Rational,
    pub bound: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LcszReport {
    pub mu: u32,
    pub modulus: u64,
    /// Coprime nonzero coefficient vectors examined.
    pub polys_checked: u64,
    pub boxes: Vec<BoxSummary>,
    pub violation_count: u64,
    /// The first few violations, in enumeration order.
    pub violations: Vec<LcszViolation>,
}

impl LcszReport {
    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }

    pub fn summary_for(&self, m: u64) -> Option<&BoxSummary> {
        self.boxes.iter().find(|b| b.m == m)
    }
}

const KEPT_VIOLATIONS: usize = 16;

/// Checks the bound for every coprime coefficient vector in `[0, N)^(2^mu)`.
///
/// Vectors are visited in lexicographic order with the constant coefficient
/// most significant, so for `mu = 2` the first candidate is `X1*X2`.
pub fn exhaustive_lcsz_check(mu: u32, n: u64, m_range: &[u64]) -> Result<LcszReport, OracleError> {
    if mu == 0 || mu > 5 {
        return Err(OracleError::Domain(format!("mu must be in 1..=5, got {mu}")));
    }
    let width = 1u32 << mu;
    let vectors = n.checked_pow(width).filter(|&v| v <= MAX_COEFF_VECTORS);
    let Some(vectors) = vectors else {
        return Err(OracleError::ScaleExceeded {
            what: "coefficient enumeration",
            estimate: format!("{n}^{width} = {}", Pow::pow(BigUint::from(n), width)),
            limit: MAX_COEFF_VECTORS,
        });
    };
    let mut boxes = Vec::with_capacity(m_range.len());
    let mut best_counts = Vec::with_capacity(m_range.len());
    for &m in m_range {
        let points = check_box(n, m, mu)?;
        boxes.push((m, points, lcsz_bound(n, m, mu)?));
        best_counts.push(None::<(u64, MultilinearPoly)>);
    }

    let mut polys_checked = 0;
    let mut violation_count = 0;
    let mut violations = Vec::new();
    let mut digits = vec![0i64; width as usize];
    for _ in 0..vectors {
        let f = MultilinearPoly::new(mu, digits.clone())?;
        if !f.is_zero() && is_coprime_poly(&f, n) {
            polys_checked += 1;
            for ((m, points, bound), best) in boxes.iter().zip(best_counts.iter_mut()) {
                let zeros = count_zeros(&f, n, *m)?;
                if best.as_ref().is_none_or(|(c, _)| zeros > *c) {
                    *best = Some((zeros, f.clone()));
                }
                let ratio = Rational::new(BigInt::from(zeros), BigInt::from(*points));
                if ratio > *bound {
                    violation_count += 1;
                    if violations.len() < KEPT_VIOLATIONS {
                        violations.push(LcszViolation {
                            poly: f.clone(),
                            m: *m,
                            ratio,
                            bound: bound.clone(),
                        });
                    }
                }
            }
        }
        // Odometer step; the last coefficient is the fastest digit.
        for d in digits.iter_mut().rev() {
            *d += 1;
            if *d < n as i64 {
                break;
            }
            *d = 0;
        }
    }

    let boxes = boxes
        .into_iter()
        .zip(best_counts)
        .filter_map(|((m, points, bound), best)| {
            best.map(|(zeros, maximizer)| BoxSummary {
                m,
                bound,
                max_ratio: Rational::new(BigInt::from(zeros), BigInt::from(points)),
                maximizer,
            })
        })
        .collect();
    Ok(LcszReport {
        mu,
        modulus: n,
        polys_checked,
        boxes,
        violation_count,
        violations,
    })
}

//! Sampled zero probability with an exact binomial confidence interval.

use statrs::distribution::{Beta, ContinuousCDF};

use super::{check_box, MultilinearPoly, OracleError};

/// Two-sided coverage of [`MonteCarloEstimate`] intervals.
pub const CONFIDENCE: f64 = 0.99;

/// SplitMix64 in counter form: output `i` is the SplitMix64 finalizer applied
/// to `seed + (i + 1) * GAMMA`, so any sample index is reproducible on its own.
///
/// Constants are those of Steele, Lea and Flood's SplitMix64.
#[derive(Clone, Debug)]
pub struct CounterRng {
    seed: u64,
    counter: u64,
}

impl CounterRng {
    pub const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
    const MIX1: u64 = 0xBF58_476D_1CE4_E5B9;
    const MIX2: u64 = 0x94D0_49BB_1331_11EB;

    pub fn new(seed: u64) -> Self {
        CounterRng { seed, counter: 0 }
    }

    /// Output at position `index` of the stream for `seed`.
    pub fn at(seed: u64, index: u64) -> u64 {
        let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(Self::GAMMA));
        z = (z ^ (z >> 30)).wrapping_mul(Self::MIX1);
        z = (z ^ (z >> 27)).wrapping_mul(Self::MIX2);
        z ^ (z >> 31)
    }

    pub fn next_u64(&mut self) -> u64 {
        let out = Self::at(self.seed, self.counter);
        self.counter += 1;
        out
    }

    /// Uniform on `[0, bound)` by rejection, so there is no modulo bias.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        // 2^64 mod bound values at the top of the range are rejected.
        let excess = (u64::MAX % bound + 1) % bound;
        loop {
            let x = self.next_u64();
            if x <= u64::MAX - excess {
                return x % bound;
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonteCarloEstimate {
    pub samples: u64,
    pub hits: u64,
    pub estimate: f64,
    /// Clopper-Pearson bounds at [`CONFIDENCE`].
    pub lower: f64,
    pub upper: f64,
    /// `max(estimate - lower, upper - estimate)`.
    pub half_width: f64,
}

impl MonteCarloEstimate {
    /// `|estimate - p| <= half_width`.
    pub fn covers(&self, p: f64) -> bool {
        (self.estimate - p).abs() <= self.half_width
    }
}

/// Estimates `P_{x <- [0, m)^mu}[f(x) = 0 mod n]` from `samples` uniform points.
pub fn monte_carlo_prob(
    f: &MultilinearPoly,
    n: u64,
    m: u64,
    samples: u64,
    seed: u64,
) -> Result<MonteCarloEstimate, OracleError> {
    if samples == 0 {
        return Err(OracleError::Domain("need at least one sample".into()));
    }
    // Same modulus and box checks as exact counting, except the box may be huge.
    if let Err(e @ OracleError::Domain(_)) = check_box(n, m, f.mu()) {
        return Err(e);
    }
    let mut rng = CounterRng::new(seed);
    let mut x = vec![0u64; f.mu() as usize];
    let mut hits = 0;
    for _ in 0..samples {
        for xi in x.iter_mut() {
            *xi = rng.below(m);
        }
        hits += (f.eval_mod(&x, n) == 0) as u64;
    }
    let (lower, upper) = clopper_pearson(hits, samples, 1.0 - CONFIDENCE);
    let estimate = hits as f64 / samples as f64;
    Ok(MonteCarloEstimate {
        samples,
        hits,
        estimate,
        lower,
        upper,
        half_width: (estimate - lower).max(upper - estimate),
    })
}

fn clopper_pearson(hits: u64, samples: u64, alpha: f64) -> (f64, f64) {
    let (k, n) = (hits as f64, samples as f64);
    let lower = if hits == 0 {
        0.0
    } else {
        Beta::new(k, n - k + 1.0)
            .expect("positive shape parameters")
            .inverse_cdf(alpha / 2.0)
    };
    let upper = if hits == samples {
        1.0
    } else {
        Beta::new(k + 1.0, n - k)
            .expect("positive shape parameters")
            .inverse_cdf(1.0 - alpha / 2.0)
    };
    (lower, upper)
}

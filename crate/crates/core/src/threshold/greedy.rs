//! Greedy knapsack over `Primes x N` in non-increasing density order.
//!
//! Densities are non-increasing in `r` for fixed `p` and in `p` at `r = 1`,
//! so the densest remaining step is always either the next step of a prime
//! already in use or the first step of the next unused prime. The candidate
//! heap therefore holds one entry per prime in use plus one fresh prime.

use std::cmp::Ordering;
use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::fmt::Write as _;

use num_bigint::BigUint;
use num_traits::{One, Pow, ToPrimitive};
use rayon::prelude::*;

use super::{check_precision, Item, ThresholdError};
use crate::betafn::ScaledTail;
use crate::exactnum::LogInterval;
use crate::primes::next_prime;

/// Number of precision doublings tried before an ambiguous ordering is fatal.
pub const MAX_ESCALATIONS: u32 = 4;

/// Output of the greedy threshold computation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThresholdResult {
    pub mu: u32,
    pub lambda: u32,
    pub precision: u32,
    /// Accumulated `sum log2 p` over every popped step.
    pub v_exact: LogInterval,
    /// `ceil(v_exact.hi)`: any `N >= 2^v_bits` meets the `2^-lambda` target.
    pub v_bits: u64,
    /// `(p, r_max)` in increasing `p`; `prod p^r_max` is the extremal modulus.
    pub items: Vec<(u64, u32)>,
    /// Accumulated weight when the loop stopped; `lo >= lambda`.
    pub w_consumed: LogInterval,
}

impl ThresholdResult {
    /// `prod p^r` over [`ThresholdResult::items`].
    pub fn modulus(&self) -> BigUint {
        self.items
            .iter()
            .fold(BigUint::one(), |acc, &(p, r)| acc * Pow::pow(BigUint::from(p), r))
    }

    /// Factorization rendered as `2^36 * 3^20 * ... * 163`.
    pub fn factorization_text(&self) -> String {
        let mut out = String::new();
        for (i, &(p, r)) in self.items.iter().enumerate() {
            if i > 0 {
                out.push_str(" * ");
            }
            if r == 1 {
                let _ = write!(out, "{p}");
            } else {
                let _ = write!(out, "{p}^{r}");
            }
        }
        out
    }
}

/// One step taken by the greedy loop, in pop order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PoppedItem {
    pub p: u64,
    pub r: u32,
    pub density: LogInterval,
}

/// A full engine run, including the pop trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GreedyRun {
    pub result: ThresholdResult,
    pub popped: Vec<PoppedItem>,
}

/// Upper bound on `log2 t(lambda, mu)`.
///
/// For `mu = 1` every density equals 1 and `t = 2^lambda`, so the engine is
/// skipped.
pub fn greedy_threshold(mu: u32, lambda: u32, precision: u32) -> Result<ThresholdResult, ThresholdError> {
    check_inputs(mu, lambda, precision)?;
    if mu == 1 {
        let exact = LogInterval::from_int(lambda as i64, precision);
        return Ok(ThresholdResult {
            mu,
            lambda,
            precision,
            v_exact: exact.clone(),
            v_bits: lambda as u64,
            items: vec![(2, lambda)],
            w_consumed: exact,
        });
    }
    Ok(run_greedy(mu, lambda, precision)?.result)
}

/// Runs the engine for any `mu >= 1` (no `mu = 1` shortcut) and records pop order.
pub fn run_greedy(mu: u32, lambda: u32, precision: u32) -> Result<GreedyRun, ThresholdError> {
    check_inputs(mu, lambda, precision)?;
    Engine::new(mu, precision).run(lambda)
}

/// `v_bits` for every `(mu, lambda)`, rows in `mus` order and columns in `lambdas` order.
pub fn threshold_table(mus: &[u32], lambdas: &[u32], precision: u32) -> Result<Vec<Vec<u64>>, ThresholdError> {
    let cells: Vec<(u32, u32)> = mus
        .iter()
        .flat_map(|&mu| lambdas.iter().map(move |&l| (mu, l)))
        .collect();
    let values = cells
        .par_iter()
        .map(|&(mu, l)| greedy_threshold(mu, l, precision).map(|r| r.v_bits))
        .collect::<Result<Vec<u64>, _>>()?;
    Ok(values.chunks(lambdas.len().max(1)).map(<[u64]>::to_vec).collect())
}

fn check_inputs(mu: u32, lambda: u32, precision: u32) -> Result<(), ThresholdError> {
    if mu == 0 || lambda == 0 {
        return Err(ThresholdError::InvalidParameter(
            "mu and lambda must be at least 1".into(),
        ));
    }
    check_precision(precision)
}

#[derive(Clone, Debug)]
struct Candidate {
    item: Item,
    precision: u32,
}

impl Candidate {
    fn key(&self) -> (u64, u32) {
        (self.item.p, self.item.r)
    }
}

// Max-heap order: larger density upper endpoint first, then smaller p, then
// smaller r. Keying on the upper endpoint means that once the top's lower
// endpoint clears the runner-up's upper endpoint, it clears every entry.
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.item
            .density
            .cmp_hi(&other.item.density)
            .then_with(|| other.item.p.cmp(&self.item.p))
            .then_with(|| other.item.r.cmp(&self.item.r))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

struct Engine {
    mu: u32,
    precision: u32,
    tails: HashMap<u64, ScaledTail>,
}

impl Engine {
    fn new(mu: u32, precision: u32) -> Self {
        Engine {
            mu,
            precision,
            tails: HashMap::new(),
        }
    }

    fn candidate(&mut self, p: u64, r: u32, precision: u32) -> Result<Candidate, ThresholdError> {
        let mu = self.mu;
        let tail = match self.tails.entry(p) {
            Entry::Occupied(e) => e.into_mut(),
            Entry::Vacant(e) => e.insert(ScaledTail::new(p, mu)),
        };
        Ok(Candidate {
            item: Item::from_tail(tail, r, precision)?,
            precision,
        })
    }

    fn run(mut self, lambda: u32) -> Result<GreedyRun, ThresholdError> {
        let base = self.precision;
        let mut heap = BinaryHeap::new();
        heap.push(self.candidate(2, 1, base)?);
        let mut pmax = 2u64;
        let mut v = LogInterval::zero(base);
        let mut w = LogInterval::zero(base);
        let mut items = BTreeMap::new();
        let mut popped = Vec::new();

        // Stop on the lower endpoint: stopping late only enlarges v.
        while w.lo_cmp_int(lambda as u64) == Ordering::Less {
            let top = self.pop_densest(&mut heap)?;
            let Item { p, r, .. } = top.item;
            heap.push(self.candidate(p, r + 1, base)?);
            v = &v + &top.item.dval;
            w = &w + &top.item.dweight;
            items.insert(p, r);
            if p == pmax {
                pmax = next_prime(p);
                heap.push(self.candidate(pmax, 1, base)?);
            }
            popped.push(PoppedItem {
                p,
                r,
                density: top.item.density,
            });
        }

        let v_bits = v
            .ceil_hi()
            .to_u64()
            .expect("threshold bit count fits in u64");
        Ok(GreedyRun {
            result: ThresholdResult {
                mu: self.mu,
                lambda,
                precision: base,
                v_exact: v,
                v_bits,
                items: items.into_iter().collect(),
                w_consumed: w,
            },
            popped,
        })
    }

    /// Pops the entry whose density is provably the largest, refining the two
    /// leading enclosures when they overlap.
    fn pop_densest(&mut self, heap: &mut BinaryHeap<Candidate>) -> Result<Candidate, ThresholdError> {
        let limit = self.precision << MAX_ESCALATIONS;
        loop {
            let top = heap.pop().expect("candidate heap is never empty");
            let Some(next) = heap.peek() else {
                return Ok(top);
            };
            let (a, b) = (&top.item.density, &next.item.density);
            if a.certainly_gt(b) {
                return Ok(top);
            }
            // Two exact, equal densities are a genuine tie; heap order breaks it.
            if a.is_point() && b.is_point() && a.same_endpoints(b) {
                return Ok(top);
            }
            if top.precision >= limit && next.precision >= limit {
                if a.same_endpoints(b) {
                    return Ok(top);
                }
                return Err(ThresholdError::PrecisionExhausted {
                    first: top.key(),
                    second: next.key(),
                    precision: limit,
                });
            }
            let next = heap.pop().expect("peeked entry exists");
            for c in [top, next] {
                let refined = if c.precision < limit {
                    let (p, r) = c.key();
                    self.candidate(p, r, c.precision * 2)?
                } else {
                    c
                };
                heap.push(refined);
            }
        }
    }
}

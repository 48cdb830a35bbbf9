#![allow(dead_code)]

use lcsz::exactnum::Rational;
use lcsz::oracle::CounterRng;
use lcsz::primes::next_prime;
use lcsz::threshold::{greedy_threshold, FeasibilityEvaluator};
use num_bigint::BigInt;

pub const PUBLISHED_TABLE: &str = include_str!("../data/published_thresholds.csv");
pub const MU20_LAMBDA120: &str = include_str!("../data/mu20_lambda120_factorization.txt");

/// `(lambdas, rows of (mu, values))` from a `mu,lambda_a,lambda_b,...` CSV.
pub fn parse_table(csv: &str) -> (Vec<u32>, Vec<(u32, Vec<u64>)>) {
    let mut lines = csv.lines();
    let header = lines.next().expect("header row");
    let lambdas = header
        .split(',')
        .skip(1)
        .map(|h| h.trim_start_matches("lambda_").parse().expect("lambda column"))
        .collect();
    let rows = lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let mut cells = l.split(',').map(|c| c.parse::<u64>().expect("integer cell"));
            let mu = cells.next().expect("mu cell") as u32;
            (mu, cells.collect())
        })
        .collect();
    (lambdas, rows)
}

pub fn first_primes(count: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(count);
    let mut p = 2;
    while out.len() < count {
        out.push(p);
        p = next_prime(p);
    }
    out
}

#[derive(Debug, Default)]
pub struct FeasibilityOutcome {
    pub checked: u64,
    /// Candidates whose value provably exceeds the greedy bound.
    pub violations: Vec<Vec<(u64, u32)>>,
    /// Largest `value.mid / v.mid` seen.
    pub closest_ratio: f64,
}

struct Sampler {
    eval: FeasibilityEvaluator,
    rng: CounterRng,
    lambda: Rational,
}

impl Sampler {
    fn weight_fits(&mut self, items: &[(u64, u32)]) -> bool {
        let (_, w) = self.eval.evaluate(items).expect("valid factorization");
        w.hi_rational() <= self.lambda
    }

    fn pick(&mut self, len: usize) -> usize {
        self.rng.below(len as u64) as usize
    }

    fn propose(&mut self, greedy: &[(u64, u32)], pool: &[u64]) -> Vec<(u64, u32)> {
        match self.rng.below(3) {
            // Perturb the greedy solution.
            0 => {
                let mut items: Vec<(u64, u32)> = greedy
                    .iter()
                    .map(|&(p, r)| (p, (r as i64 + self.rng.below(5) as i64 - 2).max(0) as u32))
                    .collect();
                for &p in pool.iter().skip(greedy.len()).take(self.rng.below(4) as usize) {
                    items.push((p, 1 + self.rng.below(2) as u32));
                }
                items
            }
            // Sparse random support.
            1 => {
                let k = 1 + self.pick(pool.len());
                let max_r = greedy.iter().map(|&(_, r)| r).max().unwrap_or(1) as u64 + 3;
                let mut items = Vec::new();
                for &p in pool {
                    if self.rng.below(pool.len() as u64) < k as u64 {
                        items.push((p, 1 + self.rng.below(max_r) as u32));
                    }
                }
                items
            }
            // Single prime power.
            _ => {
                let p = pool[self.pick(pool.len().min(50))];
                vec![(p, 1 + self.rng.below(200) as u32)]
            }
        }
    }

    fn repair(&mut self, mut items: Vec<(u64, u32)>, pool: &[u64]) -> Vec<(u64, u32)> {
        items.retain(|&(_, r)| r > 0);
        while !self.weight_fits(&items) {
            let i = self.pick(items.len());
            // Larger cuts first when far over budget keep this loop short.
            let cut = (items[i].1 / 2).max(1);
            items[i].1 -= if self.rng.below(2) == 0 { cut } else { 1 };
            items.retain(|&(_, r)| r > 0);
        }
        // Push toward the boundary.
        for _ in 0..6 {
            let p = pool[self.pick(pool.len())];
            match items.iter().position(|&(q, _)| q == p) {
                Some(i) => {
                    items[i].1 += 1;
                    if !self.weight_fits(&items) {
                        items[i].1 -= 1;
                    }
                }
                None => {
                    items.push((p, 1));
                    if !self.weight_fits(&items) {
                        items.pop();
                    }
                }
            }
        }
        items
    }
}

/// Draws `samples` random factorizations with certified weight `<= lambda`
/// and compares each value against the greedy bound.
pub fn random_feasibility(mu: u32, lambda: u32, samples: u64, seed: u64) -> FeasibilityOutcome {
    let greedy = greedy_threshold(mu, lambda, 128).expect("greedy run");
    let pool = first_primes(greedy.items.len() + 12);
    let mut sampler = Sampler {
        eval: FeasibilityEvaluator::new(mu, 128),
        rng: CounterRng::new(seed),
        lambda: Rational::from_integer(BigInt::from(lambda)),
    };
    let mut outcome = FeasibilityOutcome::default();
    for _ in 0..samples {
        let proposal = sampler.propose(&greedy.items, &pool);
        let items = sampler.repair(proposal, &pool);
        let (value, _) = sampler.eval.evaluate(&items).expect("valid factorization");
        if value.certainly_gt(&greedy.v_exact) {
            outcome.violations.push(items);
        }
        outcome.closest_ratio = outcome
            .closest_ratio
            .max(value.mid_f64() / greedy.v_exact.mid_f64());
        outcome.checked += 1;
    }
    outcome
}

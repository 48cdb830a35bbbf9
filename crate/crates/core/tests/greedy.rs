mod common;

use std::cmp::Ordering;

use common::{parse_table, random_feasibility, PUBLISHED_TABLE};
use lcsz::threshold::{feasible_value, greedy_threshold, run_greedy, threshold_table};
use proptest::prelude::*;

#[test]
fn published_grid_is_reproduced() {
    let (lambdas, rows) = parse_table(PUBLISHED_TABLE);
    let mus: Vec<u32> = rows.iter().map(|(mu, _)| *mu).collect();
    let computed = threshold_table(&mus, &lambdas, 128).unwrap();
    for ((mu, expected), got) in rows.iter().zip(&computed) {
        assert_eq!(got, expected, "mu = {mu}");
    }
}

#[test]
fn thresholds_monotone_over_grid() {
    let (lambdas, rows) = parse_table(PUBLISHED_TABLE);
    let mus: Vec<u32> = rows.iter().map(|(mu, _)| *mu).collect();
    let grid = threshold_table(&mus, &lambdas, 128).unwrap();
    for row in &grid {
        assert!(row.windows(2).all(|w| w[0] <= w[1]), "{row:?}");
    }
    for pair in grid.windows(2) {
        assert!(pair[0].iter().zip(&pair[1]).all(|(a, b)| a <= b));
    }
}

#[test]
fn weight_just_reaches_lambda() {
    for (mu, lambda) in [(2u32, 40u32), (5, 100), (20, 120), (30, 240)] {
        let run = run_greedy(mu, lambda, 128).unwrap();
        let res = &run.result;
        assert!(res.w_consumed.lo_cmp_int(lambda as u64) != Ordering::Less);
        // Undoing the last pop leaves the weight below lambda.
        let last = run.popped.last().unwrap();
        let mut before = res.items.clone();
        let slot = before.iter_mut().find(|(p, _)| *p == last.p).unwrap();
        slot.1 -= 1;
        let (_, w) = feasible_value(&before, mu, 128).unwrap();
        assert_eq!(w.lo_cmp_int(lambda as u64), Ordering::Less);
        // The reported value matches a fresh evaluation of the factorization.
        let (v, _) = feasible_value(&res.items, mu, 128).unwrap();
        assert!(!v.certainly_gt(&res.v_exact) && !v.certainly_lt(&res.v_exact));
    }
}

#[test]
fn runs_are_deterministic() {
    let a = run_greedy(9, 120, 128).unwrap();
    let b = run_greedy(9, 120, 128).unwrap();
    assert_eq!(a, b);
}

#[test]
fn higher_precision_agrees() {
    for (mu, lambda) in [(3u32, 100u32), (20, 120)] {
        let base = greedy_threshold(mu, lambda, 128).unwrap();
        let fine = greedy_threshold(mu, lambda, 512).unwrap();
        assert_eq!(base.items, fine.items);
        assert_eq!(base.v_bits, fine.v_bits);
        assert!(base.v_exact.contains(&fine.v_exact) || !fine.v_exact.certainly_gt(&base.v_exact));
    }
}

#[test]
fn random_factorizations_never_beat_greedy() {
    for (mu, lambda, seed) in [(2u32, 40u32, 1u64), (5, 100, 2), (20, 120, 3)] {
        let outcome = random_feasibility(mu, lambda, 10_000, seed);
        assert_eq!(outcome.checked, 10_000);
        assert!(outcome.violations.is_empty(), "{:?}", outcome.violations.first());
        assert!(outcome.closest_ratio > 0.9, "sampler stays far from the optimum");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn v_bits_monotone_in_lambda(mu in 1u32..12, lambda in 1u32..200) {
        let a = greedy_threshold(mu, lambda, 128).unwrap().v_bits;
        let b = greedy_threshold(mu, lambda + 1, 128).unwrap().v_bits;
        prop_assert!(a <= b);
        prop_assert!(a >= lambda as u64);
    }

    #[test]
    fn modulus_bit_length_matches(mu in 2u32..15, lambda in 1u32..150) {
        let res = greedy_threshold(mu, lambda, 128).unwrap();
        let bits = res.modulus().bits();
        // log2 N lies in (bits - 1, bits], and v_bits = ceil(log2 N) up to enclosure slack.
        prop_assert!(res.v_bits == bits || res.v_bits == bits + 1);
    }
}

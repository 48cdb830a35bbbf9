//! Deterministic primality testing and factorization for 64-bit integers.

use num_integer::Integer;

const SMALL_PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Strong probable-prime test to base `a` for odd `n > 2`.
fn is_strong_probable_prime(n: u64, a: u64) -> bool {
    let d_shift = (n - 1).trailing_zeros();
    let d = (n - 1) >> d_shift;
    let mut x = pow_mod(a, d, n);
    if x == 1 || x == n - 1 {
        return true;
    }
    for _ in 1..d_shift {
        x = mul_mod(x, x, n);
        if x == n - 1 {
            return true;
        }
    }
    false
}

/// Deterministic for every `u64`: the first twelve prime bases have no
/// common strong pseudoprime below 3.3 * 10^24.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &SMALL_PRIMES {
        if n == p {
            return true;
        }
        if n.is_multiple_of(p) {
            return false;
        }
    }
    if n < 41 * 41 {
        return true;
    }
    SMALL_PRIMES.iter().all(|&a| is_strong_probable_prime(n, a))
}

/// Smallest prime strictly greater than `n`.
///
/// Panics if no such prime fits in a `u64`.
pub fn next_prime(n: u64) -> u64 {
    if n < 2 {
        return 2;
    }
    let mut candidate = if n.is_multiple_of(2) { n + 1 } else { n + 2 };
    loop {
        if is_prime(candidate) {
            return candidate;
        }
        candidate = candidate
            .checked_add(2)
            .expect("no prime above this value fits in u64");
    }
}

/// Primes `p <= limit` in increasing order.
pub fn primes_up_to(limit: u64) -> impl Iterator<Item = u64> {
    std::iter::successors(Some(2u64), |&p| Some(next_prime(p))).take_while(move |&p| p <= limit)
}

/// Prime factors of `n` with multiplicity, increasing. Empty for `n <= 1`.
pub fn factor(n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    if n <= 1 {
        return out;
    }
    let mut rest = n;
    for p in primes_up_to(1000) {
        if rest.is_multiple_of(p) {
            let mut r = 0;
            while rest.is_multiple_of(p) {
                rest /= p;
                r += 1;
            }
            out.push((p, r));
        }
        if rest == 1 {
            return out;
        }
    }
    let mut large = Vec::new();
    split_into(rest, &mut large);
    large.sort_unstable();
    for p in large {
        match out.last_mut() {
            Some((q, r)) if *q == p => *r += 1,
            _ => out.push((p, 1)),
        }
    }
    out
}

fn split_into(n: u64, acc: &mut Vec<u64>) {
    if n == 1 {
        return;
    }
    if is_prime(n) {
        acc.push(n);
        return;
    }
    let d = pollard_rho(n);
    split_into(d, acc);
    split_into(n / d, acc);
}

/// A nontrivial divisor of composite `n` with no factor below 1000.
fn pollard_rho(n: u64) -> u64 {
    let isqrt = (n as f64).sqrt() as u64;
    for s in [isqrt.saturating_sub(1), isqrt, isqrt + 1] {
        if s > 1 && s.checked_mul(s) == Some(n) {
            return s;
        }
    }
    for c in 1u64.. {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let (mut x, mut y, mut d) = (2u64, 2u64, 1u64);
        while d == 1 {
            x = f(x);
            y = f(f(y));
            d = x.abs_diff(y).gcd(&n);
        }
        if d != n {
            return d;
        }
    }
    unreachable!("rho iteration always finds a factor of a composite")
}

//! Exact integer and rational arithmetic, binomial coefficients, and
//! directed-rounding enclosures of base-2 logarithms.
//!
//! Every inexact quantity in the crate is a [`LogInterval`]: a pair of dyadic
//! fixed-point endpoints `lo / 2^f <= x <= hi / 2^f` computed from exact
//! rationals. Floats never feed into an enclosure.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::sync::{Mutex, OnceLock};

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exact arbitrary-precision fraction, always reduced with a positive denominator.
pub type Rational = BigRational;

/// Working precision, in bits, used when a caller does not ask for one.
pub const DEFAULT_PRECISION: u32 = 128;

/// Fractional bits stored beyond the requested precision.
pub const STORE_GUARD: u32 = 8;

/// Fractional bits carried while the series is being summed.
const WORK_GUARD: u32 = 40;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NumError {
    #[error("logarithm of nonpositive value {0}")]
    NonPositiveLog(String),
    #[error("zero base raised to negative exponent {0}")]
    ZeroToNegativePower(i64),
}

/// `C(n, k)`, zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 1..=k {
        // acc * (n - k + i) is a product of i consecutive integers, so the
        // division by i is exact.
        acc *= n - k + i;
        acc /= i;
    }
    acc
}

/// Exact `q^e` for any integer exponent.
pub fn rational_pow(q: &Rational, e: i64) -> Result<Rational, NumError> {
    if e < 0 && q.is_zero() {
        return Err(NumError::ZeroToNegativePower(e));
    }
    let mag = e.unsigned_abs();
    let num: BigInt = Pow::pow(q.numer(), mag);
    let den: BigInt = Pow::pow(q.denom(), mag);
    Ok(if e >= 0 {
        Rational::new(num, den)
    } else {
        Rational::new(den, num)
    })
}

pub(crate) fn floor_div(a: &BigInt, b: &BigInt) -> BigInt {
    a.div_floor(b)
}

pub(crate) fn ceil_div(a: &BigInt, b: &BigInt) -> BigInt {
    -((-a).div_floor(b))
}

fn pow2(bits: u32) -> BigInt {
    BigInt::one() << bits as usize
}

/// Enclosure of a real number by two dyadic endpoints sharing a scale `2^-frac_bits`.
///
/// Used for base-2 logarithms and for quantities derived from them (sums,
/// quotients). `precision` records the accuracy the enclosure was requested at.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogInterval {
    lo: BigInt,
    hi: BigInt,
    frac_bits: u32,
    precision: u32,
}

impl LogInterval {
    /// Point enclosure of an integer.
    pub fn from_int(value: i64, precision: u32) -> Self {
        let frac_bits = precision + STORE_GUARD;
        let v = BigInt::from(value) << frac_bits as usize;
        LogInterval {
            lo: v.clone(),
            hi: v,
            frac_bits,
            precision,
        }
    }

    pub fn zero(precision: u32) -> Self {
        Self::from_int(0, precision)
    }

    /// Builds an enclosure from raw endpoints on the `2^-frac_bits` grid.
    ///
    /// Panics if `lo > hi`.
    pub fn from_raw(lo: BigInt, hi: BigInt, frac_bits: u32, precision: u32) -> Self {
        assert!(lo <= hi, "inverted enclosure");
        LogInterval {
            lo,
            hi,
            frac_bits,
            precision,
        }
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn frac_bits(&self) -> u32 {
        self.frac_bits
    }

    pub fn raw_lo(&self) -> &BigInt {
        &self.lo
    }

    pub fn raw_hi(&self) -> &BigInt {
        &self.hi
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn lo_rational(&self) -> Rational {
        Rational::new(self.lo.clone(), pow2(self.frac_bits))
    }

    pub fn hi_rational(&self) -> Rational {
        Rational::new(self.hi.clone(), pow2(self.frac_bits))
    }

    pub fn width(&self) -> Rational {
        self.hi_rational() - self.lo_rational()
    }

    pub fn lo_f64(&self) -> f64 {
        dyadic_to_f64(&self.lo, self.frac_bits)
    }

    pub fn hi_f64(&self) -> f64 {
        dyadic_to_f64(&self.hi, self.frac_bits)
    }

    /// Largest f64 not above the lower endpoint.
    pub fn lo_f64_down(&self) -> f64 {
        let x = self.lo_f64();
        match Rational::from_float(x) {
            Some(q) if q > self.lo_rational() => x.next_down(),
            _ => x,
        }
    }

    /// Smallest f64 not below the upper endpoint.
    pub fn hi_f64_up(&self) -> f64 {
        let x = self.hi_f64();
        match Rational::from_float(x) {
            Some(q) if q < self.hi_rational() => x.next_up(),
            _ => x,
        }
    }

    pub fn mid_f64(&self) -> f64 {
        dyadic_to_f64(&(&self.lo + &self.hi), self.frac_bits + 1)
    }

    /// Endpoints rescaled to `bits` fractional bits, rounded outward.
    fn endpoints_at(&self, bits: u32) -> (BigInt, BigInt) {
        match bits.cmp(&self.frac_bits) {
            Ordering::Equal => (self.lo.clone(), self.hi.clone()),
            Ordering::Greater => {
                let s = (bits - self.frac_bits) as usize;
                (&self.lo << s, &self.hi << s)
            }
            Ordering::Less => {
                let d = pow2(self.frac_bits - bits);
                (floor_div(&self.lo, &d), ceil_div(&self.hi, &d))
            }
        }
    }

    /// Smallest integer not below the upper endpoint.
    pub fn ceil_hi(&self) -> BigInt {
        ceil_div(&self.hi, &pow2(self.frac_bits))
    }

    /// Largest integer not above the lower endpoint.
    pub fn floor_lo(&self) -> BigInt {
        floor_div(&self.lo, &pow2(self.frac_bits))
    }

    pub fn contains_rational(&self, q: &Rational) -> bool {
        self.lo_rational() <= *q && *q <= self.hi_rational()
    }

    /// True iff `other` lies entirely inside `self`.
    pub fn contains(&self, other: &LogInterval) -> bool {
        let bits = self.frac_bits.max(other.frac_bits);
        let (a_lo, a_hi) = self.endpoints_at(bits);
        let (b_lo, b_hi) = other.endpoints_at(bits);
        a_lo <= b_lo && b_hi <= a_hi
    }

    /// Widens both endpoints by `ulps` units of the stored grid.
    pub fn widen(&self, ulps: u32) -> LogInterval {
        LogInterval {
            lo: &self.lo - ulps,
            hi: &self.hi + ulps,
            frac_bits: self.frac_bits,
            precision: self.precision,
        }
    }

    /// `self.lo > other.hi`: every point of `self` exceeds every point of `other`.
    pub fn certainly_gt(&self, other: &LogInterval) -> bool {
        let bits = self.frac_bits.max(other.frac_bits);
        let (a_lo, _) = self.endpoints_at(bits);
        let (_, b_hi) = other.endpoints_at(bits);
        a_lo > b_hi
    }

    pub fn certainly_lt(&self, other: &LogInterval) -> bool {
        other.certainly_gt(self)
    }

    /// Same endpoints as real numbers, regardless of grid.
    pub fn same_endpoints(&self, other: &LogInterval) -> bool {
        let bits = self.frac_bits.max(other.frac_bits);
        self.endpoints_at(bits) == other.endpoints_at(bits)
    }

    pub fn cmp_hi(&self, other: &LogInterval) -> Ordering {
        let bits = self.frac_bits.max(other.frac_bits);
        self.endpoints_at(bits).1.cmp(&other.endpoints_at(bits).1)
    }

    pub fn cmp_lo(&self, other: &LogInterval) -> Ordering {
        let bits = self.frac_bits.max(other.frac_bits);
        self.endpoints_at(bits).0.cmp(&other.endpoints_at(bits).0)
    }

    /// Compares midpoints exactly.
    pub fn cmp_mid(&self, other: &LogInterval) -> Ordering {
        let bits = self.frac_bits.max(other.frac_bits);
        let (a_lo, a_hi) = self.endpoints_at(bits);
        let (b_lo, b_hi) = other.endpoints_at(bits);
        (a_lo + a_hi).cmp(&(b_lo + b_hi))
    }

    /// Lower endpoint compared against an integer.
    pub fn lo_cmp_int(&self, value: u64) -> Ordering {
        self.lo.cmp(&(BigInt::from(value) << self.frac_bits as usize))
    }

    /// Enclosure of `self / other` for strictly positive enclosures.
    ///
    /// Returns `None` unless both lower endpoints are positive.
    pub fn div_positive(&self, other: &LogInterval) -> Option<LogInterval> {
        if !self.lo.is_positive() || !other.lo.is_positive() {
            return None;
        }
        if self.same_endpoints(other) && self.is_point() {
            return Some(LogInterval::from_int(1, self.precision.min(other.precision)));
        }
        let bits = self.frac_bits.max(other.frac_bits);
        let (a_lo, a_hi) = self.endpoints_at(bits);
        let (b_lo, b_hi) = other.endpoints_at(bits);
        let scale = bits as usize;
        let lo = floor_div(&(a_lo << scale), &b_hi);
        let hi = ceil_div(&(a_hi << scale), &b_lo);
        Some(LogInterval {
            lo,
            hi,
            frac_bits: bits,
            precision: self.precision.min(other.precision),
        })
    }

    /// Multiplies by a nonnegative integer.
    pub fn scale(&self, factor: u64) -> LogInterval {
        LogInterval {
            lo: &self.lo * factor,
            hi: &self.hi * factor,
            frac_bits: self.frac_bits,
            precision: self.precision,
        }
    }

    /// Endpoints as decimal strings with `digits` fractional digits, rounded outward.
    pub fn to_decimal_strings(&self, digits: usize) -> (String, String) {
        let den = pow2(self.frac_bits);
        (
            format_decimal(&self.lo, &den, digits, Rounding::Down),
            format_decimal(&self.hi, &den, digits, Rounding::Up),
        )
    }
}

impl Add for &LogInterval {
    type Output = LogInterval;

    fn add(self, rhs: &LogInterval) -> LogInterval {
        let bits = self.frac_bits.max(rhs.frac_bits);
        let (a_lo, a_hi) = self.endpoints_at(bits);
        let (b_lo, b_hi) = rhs.endpoints_at(bits);
        LogInterval {
            lo: a_lo + b_lo,
            hi: a_hi + b_hi,
            frac_bits: bits,
            precision: self.precision.min(rhs.precision),
        }
    }
}

impl Neg for &LogInterval {
    type Output = LogInterval;

    fn neg(self) -> LogInterval {
        LogInterval {
            lo: -&self.hi,
            hi: -&self.lo,
            frac_bits: self.frac_bits,
            precision: self.precision,
        }
    }
}

impl Sub for &LogInterval {
    type Output = LogInterval;

    fn sub(self, rhs: &LogInterval) -> LogInterval {
        self + &(-rhs)
    }
}

impl fmt::Display for LogInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (lo, hi) = self.to_decimal_strings(12);
        write!(f, "[{lo}, {hi}]")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rounding {
    Down,
    Up,
}

/// Decimal rendering of `num / den` (den > 0) with `digits` fractional digits.
pub fn format_decimal(num: &BigInt, den: &BigInt, digits: usize, rounding: Rounding) -> String {
    let scale = BigInt::from(10u32).pow(digits as u32);
    let scaled = num * &scale;
    let q = match rounding {
        Rounding::Down => floor_div(&scaled, den),
        Rounding::Up => ceil_div(&scaled, den),
    };
    let negative = q.is_negative();
    let mag = q.abs().to_str_radix(10);
    let padded = if mag.len() <= digits {
        format!("{}{}", "0".repeat(digits + 1 - mag.len()), mag)
    } else {
        mag
    };
    let (int_part, frac_part) = padded.split_at(padded.len() - digits);
    let sign = if negative { "-" } else { "" };
    if digits == 0 {
        format!("{sign}{int_part}")
    } else {
        format!("{sign}{int_part}.{frac_part}")
    }
}

/// Decimal rendering of a rational, truncated toward negative infinity.
pub fn rational_to_decimal(q: &Rational, digits: usize) -> String {
    format_decimal(q.numer(), q.denom(), digits, Rounding::Down)
}

fn dyadic_to_f64(raw: &BigInt, frac_bits: u32) -> f64 {
    let bits = raw.bits();
    if bits <= 64 {
        return raw.to_f64().unwrap_or(f64::NAN) * (-(frac_bits as f64)).exp2();
    }
    let shift = bits - 64;
    let top = raw >> shift as usize;
    top.to_f64().unwrap_or(f64::NAN) * (shift as f64 - frac_bits as f64).exp2()
}

/// Enclosure of `log2(q)` for `q > 0`.
pub fn log2_interval(q: &Rational, precision: u32) -> Result<LogInterval, NumError> {
    if !q.is_positive() {
        return Err(NumError::NonPositiveLog(q.to_string()));
    }
    let num = q.numer().magnitude();
    let den = q.denom().magnitude();
    Ok(log2_ratio(num, den, precision))
}

/// Enclosure of `log2(num / den)` without reducing the fraction first.
///
/// Panics if either argument is zero.
pub fn log2_ratio(num: &BigUint, den: &BigUint, precision: u32) -> LogInterval {
    assert!(!num.is_zero() && !den.is_zero(), "log2 of zero");
    // Normalize num / den = 2^k * x with 1 <= x < 2.
    let mut k = num.bits() as i64 - den.bits() as i64;
    let (mut a, mut b) = shifted(num, den, k);
    if a < b {
        k -= 1;
        (a, b) = shifted(num, den, k);
    }
    if a == b {
        return LogInterval::from_int(k, precision);
    }

    let work = precision + WORK_GUARD;
    let (ln_lo, ln_hi) = ln_fixed(&a, &b, work);
    let (ln2_lo, ln2_hi) = ln2_fixed(work);
    let shift = work as usize;
    let frac_lo = floor_div(&(ln_lo << shift), &ln2_hi);
    let frac_hi = ceil_div(&(ln_hi << shift), &ln2_lo);
    let whole = BigInt::from(k) << shift;

    // Round outward to the storage grid with one extra unit of padding, so an
    // enclosure at higher precision always nests inside this one.
    let store = precision + STORE_GUARD;
    let d = pow2(work - store);
    let lo = floor_div(&(&whole + frac_lo), &d) - 1;
    let hi = ceil_div(&(&whole + frac_hi), &d) + 1;
    LogInterval {
        lo,
        hi,
        frac_bits: store,
        precision,
    }
}

fn shifted(num: &BigUint, den: &BigUint, k: i64) -> (BigUint, BigUint) {
    if k >= 0 {
        (num.clone(), den << k as usize)
    } else {
        (num << (-k) as usize, den.clone())
    }
}

/// Fixed-point enclosure, in units of `2^-work`, of `ln(a / b)` for `1 < a / b <= 2`.
///
/// Uses `ln x = 2 atanh z` with `z = (x - 1) / (x + 1) <= 1/3`, summing the
/// odd power series with floor on the lower chain and ceiling on the upper
/// chain, then bounding the tail geometrically.
fn ln_fixed(a: &BigUint, b: &BigUint, work: u32) -> (BigInt, BigInt) {
    let a = BigInt::from_biguint(Sign::Plus, a.clone());
    let b = BigInt::from_biguint(Sign::Plus, b.clone());
    let one = pow2(work);
    let shift = work as usize;
    let num = (&a - &b) << shift;
    let den = &a + &b;
    let z_lo = floor_div(&num, &den);
    let z_hi = ceil_div(&num, &den);
    let z2_lo = floor_div(&(&z_lo * &z_lo), &one);
    let z2_hi = ceil_div(&(&z_hi * &z_hi), &one);

    let mut pow_lo = z_lo;
    let mut pow_hi = z_hi;
    let mut sum_lo = BigInt::zero();
    let mut sum_hi = BigInt::zero();
    let mut n: u64 = 0;
    loop {
        let odd = BigInt::from(2 * n + 1);
        sum_lo += floor_div(&pow_lo, &odd);
        sum_hi += ceil_div(&pow_hi, &odd);
        pow_lo = floor_div(&(&pow_lo * &z2_lo), &one);
        pow_hi = ceil_div(&(&pow_hi * &z2_hi), &one);
        n += 1;
        if pow_hi <= BigInt::one() {
            break;
        }
    }
    // Remaining terms sum to at most z^(2n+1) / (1 - z^2) < (9/8) ulp.
    sum_hi += 2;
    (sum_lo * 2, sum_hi * 2)
}

fn ln2_fixed(work: u32) -> (BigInt, BigInt) {
    static CACHE: OnceLock<Mutex<HashMap<u32, (BigInt, BigInt)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().expect("ln2 cache poisoned").get(&work) {
        return hit.clone();
    }
    let value = ln_fixed(&BigUint::from(2u32), &BigUint::one(), work);
    cache
        .lock()
        .expect("ln2 cache poisoned")
        .insert(work, value.clone());
    value
}

//! Sound modulus-size thresholds for the multilinear composite
//! Schwartz-Zippel lemma, with brute-force oracles for the underlying bound.

pub mod betafn;
pub mod cli;
pub mod exactnum;
pub mod oracle;
pub mod primes;
pub mod threshold;

pub use exactnum::{LogInterval, Rational, DEFAULT_PRECISION};

//! Segmented sieve for the von Mangoldt function.

use crate::error::{Error, Result};
use crate::numeric::primes_up_to;
use serde::Serialize;

/// `Lambda(m)` for `m <= P`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaTable {
    pub p_max: u64,
    /// Base prime of `m` when `m` is a prime power, else 0. Index 0 unused.
    #[serde(skip)]
    pub base: Vec<u32>,
    pub primes: Vec<u64>,
}

/// Largest table the sieve will allocate.
pub const MAX_SIEVE: u64 = 400_000_000;

impl LambdaTable {
    pub fn lambda(&self, m: u64) -> f64 {
        match self.base.get(m as usize) {
            Some(&p) if p > 0 => (p as f64).ln(),
            _ => 0.0,
        }
    }

    pub fn base_prime(&self, m: u64) -> Option<u64> {
        match self.base.get(m as usize) {
            Some(&p) if p > 0 => Some(p as u64),
            _ => None,
        }
    }

    pub fn is_prime(&self, m: u64) -> bool {
        self.base_prime(m) == Some(m)
    }

    /// Chebyshev's `psi(P)`, summed in increasing `m`.
    pub fn psi(&self) -> f64 {
        (2..=self.p_max).map(|m| self.lambda(m)).sum()
    }
}

/// Sieves `[2, P]` in segments of `sqrt(P)`-sized blocks, marking prime
/// powers by repeated division against the base primes.
pub fn sieve_lambda(p_max: u64) -> Result<LambdaTable> {
    if p_max < 2 {
        return Err(Error::invalid("P must be at least 2"));
    }
    if p_max > MAX_SIEVE {
        return Err(Error::budget(
            "von Mangoldt table",
            p_max as u128,
            MAX_SIEVE as u128,
        ));
    }
    let root = (p_max as f64).sqrt() as u64 + 1;
    let small = primes_up_to(root);
    let mut base = vec![0u32; p_max as usize + 1];
    let mut primes = Vec::new();
    let seg = root.max(1 << 15);
    let mut lo = 2u64;
    let mut composite = vec![false; seg as usize];
    while lo <= p_max {
        let hi = (lo + seg - 1).min(p_max);
        composite.iter_mut().for_each(|c| *c = false);
        for &p in &small {
            if p * p > hi {
                break;
            }
            let start = (lo.div_ceil(p) * p).max(p * p);
            let mut m = start;
            while m <= hi {
                composite[(m - lo) as usize] = true;
                m += p;
            }
        }
        for m in lo..=hi {
            if !composite[(m - lo) as usize] {
                primes.push(m);
                let mut pk = m;
                loop {
                    base[pk as usize] = m as u32;
                    match pk.checked_mul(m) {
                        Some(next) if next <= p_max => pk = next,
                        _ => break,
                    }
                }
            }
        }
        lo = hi + 1;
    }
    Ok(LambdaTable {
        p_max,
        base,
        primes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::factorize;

    #[test]
    fn small_values() {
        let t = sieve_lambda(100).unwrap();
        assert!((t.lambda(8) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(t.lambda(6), 0.0);
        assert_eq!(t.lambda(1), 0.0);
        assert!(t.is_prime(97) && !t.is_prime(81));
        assert_eq!(t.base_prime(81), Some(3));
        assert_eq!(t.primes.len(), 25);
    }

    #[test]
    fn agrees_with_factorization_and_chebyshev() {
        let t = sieve_lambda(10_000).unwrap();
        let mut oracle = 0.0;
        for m in 2..=10_000u64 {
            let f = factorize(m);
            let expect = if f.len() == 1 {
                (f[0].0 as f64).ln()
            } else {
                0.0
            };
            assert_eq!(t.lambda(m), expect, "m={m}");
            oracle += expect;
        }
        let psi = t.psi();
        assert!((psi - oracle).abs() < 1e-9);
        assert!((psi - 10013.39).abs() < 0.01, "{psi}");
        let theta: f64 = t.primes.iter().map(|&p| (p as f64).ln()).sum();
        assert!((theta - 9895.99).abs() < 0.01, "{theta}");
        let band = 2.0 * 100.0 * (10_000f64).ln().powi(2);
        assert!((psi - 10_000.0).abs() <= band);
    }

    #[test]
    fn segment_boundaries() {
        // Segments are at least 2^15 wide; cross several of them.
        let t = sieve_lambda(200_000).unwrap();
        assert_eq!(t.primes.len(), 17_984);
        assert_eq!(t.base_prime(131_072), Some(2));
        assert_eq!(t.base_prime(177_147), Some(3));
        assert!(sieve_lambda(1).is_err());
    }
}

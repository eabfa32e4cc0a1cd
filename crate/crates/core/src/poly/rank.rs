//! Matrix rank over the rationals (fraction-free) and over prime fields.

use crate::error::{Error, Result};
use crate::numeric::{is_prime, mul_mod, pow_mod};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankMode {
    Exact,
    ModP(u64),
}

pub fn jacobian_rank(m: &[Vec<BigRational>], mode: RankMode) -> Result<usize> {
    match mode {
        RankMode::Exact => Ok(rank_rational(m)),
        RankMode::ModP(p) => {
            if !is_prime(p) {
                return Err(Error::CompositeModulus(p));
            }
            let pb = BigInt::from(p);
            let mut rows = Vec::with_capacity(m.len());
            for row in m {
                let mut r = Vec::with_capacity(row.len());
                for v in row {
                    let den = v.denom().mod_floor(&pb);
                    if den.is_zero() {
                        return Err(Error::invalid(format!(
                            "entry {v} has a denominator divisible by {p}"
                        )));
                    }
                    let num = v.numer().mod_floor(&pb).to_u64().unwrap();
                    let inv = pow_mod(den.to_u64().unwrap(), p - 2, p);
                    r.push(mul_mod(num, inv, p));
                }
                rows.push(r);
            }
            rank_mod_p(&rows, p)
        }
    }
}

/// Rank over the rationals: each row is scaled to integers, then Bareiss
/// elimination keeps every intermediate entry integral.
pub fn rank_rational(m: &[Vec<BigRational>]) -> usize {
    let mut a: Vec<Vec<BigInt>> = m
        .iter()
        .map(|row| {
            let l = row.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
            row.iter().map(|v| (v * &l).to_integer()).collect()
        })
        .collect();
    bareiss_rank(&mut a)
}

pub fn bareiss_rank(a: &mut [Vec<BigInt>]) -> usize {
    let rows = a.len();
    if rows == 0 {
        return 0;
    }
    let cols = a[0].len();
    let mut prev = BigInt::one();
    let mut rank = 0;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let Some(piv) = (rank..rows).find(|&r| !a[r][c].is_zero()) else {
            continue;
        };
        a.swap(rank, piv);
        for r in rank + 1..rows {
            for k in c + 1..cols {
                let v = &a[rank][c] * &a[r][k] - &a[r][c] * &a[rank][k];
                a[r][k] = v / &prev;
            }
            a[r][c] = BigInt::zero();
        }
        prev = a[rank][c].clone();
        rank += 1;
    }
    rank
}

/// Rank over `F_p`; entries must already be reduced.
pub fn rank_mod_p(m: &[Vec<u64>], p: u64) -> Result<usize> {
    if !is_prime(p) {
        return Err(Error::CompositeModulus(p));
    }
    let mut a: Vec<Vec<u64>> = m
        .iter()
        .map(|r| r.iter().map(|&v| v % p).collect())
        .collect();
    Ok(rank_mod_p_inplace(&mut a, p))
}

pub(crate) fn rank_mod_p_inplace(a: &mut [Vec<u64>], p: u64) -> usize {
    let rows = a.len();
    if rows == 0 {
        return 0;
    }
    let cols = a[0].len();
    let mut rank = 0;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let Some(piv) = (rank..rows).find(|&r| a[r][c] != 0) else {
            continue;
        };
        a.swap(rank, piv);
        let inv = pow_mod(a[rank][c], p - 2, p);
        for r in rank + 1..rows {
            if a[r][c] == 0 {
                continue;
            }
            let f = mul_mod(a[r][c], inv, p);
            #[allow(clippy::needless_range_loop)]
            for k in c..cols {
                let sub = mul_mod(f, a[rank][k], p);
                a[r][k] = (a[r][k] + p - sub) % p;
            }
        }
        rank += 1;
    }
    rank
}

//! Lift-and-count over prime powers.
//!
//! Solutions mod `p^j` lying over a solution `x` mod `p^{j-1}` are
//! `x + p^{j-1} y` with `F(x)/p^{j-1} + J(x) y = 0` mod `p` (the quadratic
//! term vanishes once `j >= 2`), so each level costs one `p`-linear solve
//! per solution of the previous level.

use super::engine::Budget;
use crate::error::{Error, Result};
use crate::numeric::{reduce, units_mod};
use crate::poly::{rank::rank_mod_p_inplace, CompiledSystem};

/// Unit solutions mod `p^k`, flattened `n` entries per solution.
#[derive(Debug, Clone)]
pub struct Level {
    pub k: u32,
    pub modulus: u64,
    pub n: usize,
    pub points: Vec<u64>,
}

impl Level {
    pub fn len(&self) -> usize {
        self.points.len() / self.n.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u64]> {
        self.points.chunks(self.n.max(1))
    }
}

/// Exhaustive scan of unit vectors mod `p`.
pub fn base_level(sys: &CompiledSystem, p: u64, budget: &Budget) -> Result<Level> {
    let n = sys.n;
    let units = units_mod(p);
    let nu = units.len() as u64;
    let total = (nu as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if total > budget.max_scan {
        return Err(Error::budget(
            format!("unit scan mod {p}"),
            total,
            budget.max_scan,
        ));
    }
    let ms = sys.reduce_mod(p);
    let points = reduce::chunked(
        total as u64,
        reduce::CHUNK,
        Vec::new(),
        |range| {
            let mut out = Vec::new();
            let mut x = vec![0u64; n];
            for i in range {
                let mut t = i;
                for v in x.iter_mut() {
                    *v = units[(t % nu) as usize];
                    t /= nu;
                }
                if ms.eval(&x).iter().all(|&v| v == 0) {
                    out.extend_from_slice(&x);
                }
            }
            out
        },
        |mut a, b| {
            a.extend(b);
            a
        },
    );
    Ok(Level {
        k: 1,
        modulus: p,
        n,
        points,
    })
}

struct Fibre {
    /// `F(x)/p^{j-1}` mod `p`.
    offset: Vec<u64>,
    /// `J(x)` mod `p`.
    jac: Vec<Vec<u64>>,
}

fn fibre(sys: &CompiledSystem, x: &[u64], p: u64, lower: u64, upper: u64) -> Fibre {
    let ms = sys.reduce_mod(upper);
    let offset = ms.eval(x).iter().map(|&v| (v / lower) % p).collect();
    let jac = sys
        .reduce_mod(p)
        .jacobian(&x.iter().map(|&v| v % p).collect::<Vec<_>>(), x.len());
    Fibre { offset, jac }
}

/// Number of `y` in `F_p^n` with `offset + J y = 0`.
fn fibre_size(f: &Fibre, p: u64, n: usize) -> u128 {
    let mut j = f.jac.clone();
    let rank = rank_mod_p_inplace(&mut j, p);
    let mut aug: Vec<Vec<u64>> = f
        .jac
        .iter()
        .zip(&f.offset)
        .map(|(row, &c)| {
            let mut r = row.clone();
            r.push(c);
            r
        })
        .collect();
    if rank_mod_p_inplace(&mut aug, p) > rank {
        0
    } else {
        (p as u128).pow((n - rank) as u32)
    }
}

/// Lifts every solution of `prev` one level, enumerating the new solutions.
pub fn lift(sys: &CompiledSystem, prev: &Level, p: u64, budget: &Budget) -> Result<Level> {
    let n = prev.n;
    let lower = prev.modulus;
    let upper = lower
        .checked_mul(p)
        .ok_or_else(|| Error::invalid("modulus overflow"))?;
    let fibre_cost = (p as u128).pow(n as u32);
    let cost = fibre_cost * prev.len() as u128;
    if cost > budget.max_scan {
        return Err(Error::budget(
            format!("lift to modulus {upper}"),
            cost,
            budget.max_scan,
        ));
    }
    let rows: Vec<&[u64]> = prev.iter().collect();
    let points = reduce::chunked(
        rows.len() as u64,
        64,
        Vec::new(),
        |range| {
            let mut out = Vec::new();
            let mut y = vec![0u64; n];
            for i in range {
                let x = rows[i as usize];
                let f = fibre(sys, x, p, lower, upper);
                if fibre_size(&f, p, n) == 0 {
                    continue;
                }
                for idx in 0..fibre_cost as u64 {
                    let mut t = idx;
                    for v in y.iter_mut() {
                        *v = t % p;
                        t /= p;
                    }
                    let ok = f.jac.iter().zip(&f.offset).all(|(row, &c)| {
                        let s = row
                            .iter()
                            .zip(&y)
                            .fold(c as u128, |s, (&a, &b)| s + a as u128 * b as u128);
                        s % p as u128 == 0
                    });
                    if ok {
                        out.extend(x.iter().zip(&y).map(|(&a, &b)| a + lower * b));
                    }
                }
            }
            out
        },
        |mut a, b| {
            a.extend(b);
            a
        },
    );
    if points.len() as u128 / n.max(1) as u128 > budget.max_keys {
        return Err(Error::budget(
            format!("solution list mod {upper}"),
            points.len() as u128,
            budget.max_keys,
        ));
    }
    Ok(Level {
        k: prev.k + 1,
        modulus: upper,
        n,
        points,
    })
}

/// `N(p^{k+1})` from the solutions mod `p^k` without enumerating the fibres.
pub fn count_next(sys: &CompiledSystem, prev: &Level, p: u64) -> Result<u128> {
    let n = prev.n;
    let lower = prev.modulus;
    let upper = lower
        .checked_mul(p)
        .ok_or_else(|| Error::invalid("modulus overflow"))?;
    let rows: Vec<&[u64]> = prev.iter().collect();
    Ok(reduce::chunked(
        rows.len() as u64,
        256,
        0u128,
        |range| {
            range
                .map(|i| fibre_size(&fibre(sys, rows[i as usize], p, lower, upper), p, n))
                .sum()
        },
        |a, b| a + b,
    ))
}

/// `N(p^j)` for `j = 1..=k`, lifting level by level.
pub fn lift_counts(sys: &CompiledSystem, p: u64, k: u32, budget: &Budget) -> Result<Vec<u128>> {
    let mut level = base_level(sys, p, budget)?;
    let mut out = vec![level.len() as u128];
    while (out.len() as u32) < k {
        if out.len() as u32 + 1 == k {
            out.push(count_next(sys, &level, p)?);
        } else {
            level = lift(sys, &level, p, budget)?;
            out.push(level.len() as u128);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_system;

    fn brute(sys: &CompiledSystem, q: u64) -> u128 {
        let units = units_mod(q);
        let n = sys.n;
        let ms = sys.reduce_mod(q);
        let total = units.len().pow(n as u32);
        let mut x = vec![0u64; n];
        let mut count = 0;
        for i in 0..total {
            let mut t = i;
            for v in x.iter_mut() {
                *v = units[t % units.len()];
                t /= units.len();
            }
            if ms.eval(&x).iter().all(|&v| v == 0) {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn lifting_matches_brute_force() {
        for (text, p, k) in [
            ("vars 2\nx1^2 + x2^2", 5, 3),
            ("vars 3\nx1*x2 + x3^2", 2, 4),
            ("vars 3\nx1*x2 + x3^2", 3, 3),
            ("vars 3\nx1^2 + x2^2 - x3^2\nx1^3 - x2^2*x3", 3, 3),
        ] {
            let sys = parse_system(text).unwrap().compile();
            let got = lift_counts(&sys, p, k, &Budget::default()).unwrap();
            for (j, &g) in got.iter().enumerate() {
                assert_eq!(
                    g,
                    brute(&sys, p.pow(j as u32 + 1)),
                    "{text} p={p} j={}",
                    j + 1
                );
            }
        }
    }
}

//! Flat term lists for hot loops.

use super::PolySystem;
use crate::numeric::{mul_mod, pow_mod, reduce_i128};
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

#[derive(Debug, Clone, PartialEq)]
pub struct CTerm {
    pub coeff: BigInt,
    /// `Some` when the coefficient fits in `i128`.
    pub small: Option<i128>,
    /// `(variable, exponent)` pairs with positive exponents.
    pub vars: Vec<(usize, u32)>,
}

/// A system as `R` rows of terms over `n` variables. Rows may be empty
/// (after restriction to a variable subset).
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledSystem {
    pub n: usize,
    pub degrees: Vec<u32>,
    pub rows: Vec<Vec<CTerm>>,
}

impl CompiledSystem {
    pub fn from_system(sys: &PolySystem) -> Self {
        let rows = sys
            .forms()
            .map(|f| {
                f.monomials
                    .iter()
                    .map(|m| CTerm {
                        coeff: m.coeff.clone(),
                        small: m.coeff.to_i128(),
                        vars: m.support().map(|j| (j, m.exps[j])).collect(),
                    })
                    .collect()
            })
            .collect();
        CompiledSystem {
            n: sys.n(),
            degrees: sys.degrees(),
            rows,
        }
    }

    pub fn r(&self) -> usize {
        self.rows.len()
    }

    /// Largest absolute coefficient, as a float.
    pub fn coeff_scale(&self) -> f64 {
        self.rows
            .iter()
            .flatten()
            .map(|t| t.coeff.abs().to_f64().unwrap_or(f64::INFINITY))
            .fold(1.0, f64::max)
    }

    /// Exact values with checked `i128` arithmetic; `None` on overflow.
    pub fn eval_i128(&self, x: &[i64]) -> Option<Vec<i128>> {
        self.rows
            .iter()
            .map(|row| {
                let mut acc: i128 = 0;
                for t in row {
                    let mut v = t.small?;
                    for &(j, e) in &t.vars {
                        v = v.checked_mul((x[j] as i128).checked_pow(e)?)?;
                    }
                    acc = acc.checked_add(v)?;
                }
                Some(acc)
            })
            .collect()
    }

    pub fn eval_big(&self, x: &[i64]) -> Vec<BigInt> {
        self.rows
            .iter()
            .map(|row| {
                let mut acc = BigInt::zero();
                for t in row {
                    let mut v = t.coeff.clone();
                    for &(j, e) in &t.vars {
                        v *= num_traits::pow(BigInt::from(x[j]), e as usize);
                    }
                    acc += v;
                }
                acc
            })
            .collect()
    }

    /// Whether every row vanishes at `x`, exactly.
    pub fn vanishes_at(&self, x: &[i64]) -> bool {
        match self.eval_i128(x) {
            Some(v) => v.iter().all(|&y| y == 0),
            None => self.eval_big(x).iter().all(Zero::is_zero),
        }
    }

    pub fn reduce_mod(&self, q: u64) -> ModSystem {
        let qb = BigInt::from(q);
        ModSystem {
            q,
            rows: self
                .rows
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|t| {
                            let c = match t.small {
                                Some(s) => reduce_i128(s, q),
                                None => {
                                    let r = &t.coeff % &qb;
                                    let r = if r.is_negative() { r + &qb } else { r };
                                    r.to_u64().expect("residue below q")
                                }
                            };
                            (c, t.vars.clone())
                        })
                        .filter(|(c, _)| *c != 0)
                        .collect()
                })
                .collect(),
        }
    }

    pub fn eval_f64(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|t| {
                        let c = t.coeff.to_f64().unwrap_or(f64::NAN);
                        t.vars.iter().fold(c, |v, &(j, e)| v * x[j].powi(e as i32))
                    })
                    .sum()
            })
            .collect()
    }

    /// `R x n` Jacobian in floating point.
    pub fn jacobian_f64(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|row| {
                let mut g = vec![0.0; self.n];
                for t in row {
                    let c = t.coeff.to_f64().unwrap_or(f64::NAN);
                    for (k, &(j, e)) in t.vars.iter().enumerate() {
                        let mut v = c * e as f64 * x[j].powi(e as i32 - 1);
                        for (l, &(jj, ee)) in t.vars.iter().enumerate() {
                            if l != k {
                                v *= x[jj].powi(ee as i32);
                            }
                        }
                        g[j] += v;
                    }
                }
                g
            })
            .collect()
    }

    /// Connected components of the graph linking variables that share a
    /// monomial. Each row is then a sum of one polynomial per component.
    /// Components are listed by smallest variable; unused variables form
    /// singleton components.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(p: &mut [usize], mut a: usize) -> usize {
            while p[a] != a {
                p[a] = p[p[a]];
                a = p[a];
            }
            a
        }
        for t in self.rows.iter().flatten() {
            if let Some(&(first, _)) = t.vars.first() {
                for &(j, _) in &t.vars[1..] {
                    let (a, b) = (find(&mut parent, first), find(&mut parent, j));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for v in 0..self.n {
            let root = find(&mut parent, v);
            groups.entry(root).or_default().push(v);
        }
        groups.into_values().collect()
    }

    /// The terms supported inside `vars`, re-indexed to `0..vars.len()`.
    pub fn restrict(&self, vars: &[usize]) -> CompiledSystem {
        let pos = |j: usize| vars.iter().position(|&v| v == j);
        let rows = self
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .filter(|t| t.vars.iter().all(|&(j, _)| pos(j).is_some()))
                    .map(|t| CTerm {
                        coeff: t.coeff.clone(),
                        small: t.small,
                        vars: t.vars.iter().map(|&(j, e)| (pos(j).unwrap(), e)).collect(),
                    })
                    .collect()
            })
            .collect();
        CompiledSystem {
            n: vars.len(),
            degrees: self.degrees.clone(),
            rows,
        }
    }
}

/// One row mod `q`: `(coefficient, [(variable, exponent)])` per term.
pub type ModRow = Vec<(u64, Vec<(usize, u32)>)>;

/// A system with coefficients reduced modulo `q`.
#[derive(Debug, Clone)]
pub struct ModSystem {
    pub q: u64,
    pub rows: Vec<ModRow>,
}

impl ModSystem {
    /// Values at a residue vector (entries already in `0..q`).
    pub fn eval(&self, x: &[u64]) -> Vec<u64> {
        let q = self.q;
        self.rows
            .iter()
            .map(|row| {
                row.iter().fold(0u64, |acc, (c, vars)| {
                    let t = vars
                        .iter()
                        .fold(*c, |v, &(j, e)| mul_mod(v, pow_mod(x[j], e as u64, q), q));
                    ((acc as u128 + t as u128) % q as u128) as u64
                })
            })
            .collect()
    }

    /// Values using per-variable power tables `pows[j][e]`, `e <= max exponent`.
    #[inline]
    pub fn eval_with_powers(&self, pows: &[&[u64]], out: &mut [u64]) {
        let q = self.q;
        for (row, o) in self.rows.iter().zip(out.iter_mut()) {
            let mut acc: u128 = 0;
            for (c, vars) in row {
                let mut t = *c;
                for &(j, e) in vars {
                    t = mul_mod(t, pows[j][e as usize], q);
                }
                acc += t as u128;
            }
            *o = (acc % q as u128) as u64;
        }
    }

    /// Jacobian modulo `q` at a residue vector.
    pub fn jacobian(&self, x: &[u64], n: usize) -> Vec<Vec<u64>> {
        let q = self.q;
        self.rows
            .iter()
            .map(|row| {
                let mut g = vec![0u64; n];
                for (c, vars) in row {
                    for (k, &(j, e)) in vars.iter().enumerate() {
                        let mut v = mul_mod(*c, e as u64 % q, q);
                        v = mul_mod(v, pow_mod(x[j], e as u64 - 1, q), q);
                        for (l, &(jj, ee)) in vars.iter().enumerate() {
                            if l != k {
                                v = mul_mod(v, pow_mod(x[jj], ee as u64, q), q);
                            }
                        }
                        g[j] = ((g[j] as u128 + v as u128) % q as u128) as u64;
                    }
                }
                g
            })
            .collect()
    }

    pub fn max_exponent(&self) -> u32 {
        self.rows
            .iter()
            .flatten()
            .flat_map(|(_, v)| v.iter().map(|&(_, e)| e))
            .max()
            .unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use crate::poly::parse_system;

    #[test]
    fn components_of_diagonal_and_coupled_systems() {
        let s = parse_system("vars 4\nx1^2 + x2^2 - x3^2 - x4^2")
            .unwrap()
            .compile();
        assert_eq!(s.components(), vec![vec![0], vec![1], vec![2], vec![3]]);
        let t = parse_system("vars 5\nx1*x3 + x2^2\nx3^3 - x2^2*x4")
            .unwrap()
            .compile();
        assert_eq!(t.components(), vec![vec![0, 2], vec![1, 3], vec![4]]);
    }

    #[test]
    fn restriction_sums_back_to_the_whole() {
        let s = parse_system("vars 4\nx1*x3 + x2^2 - 3*x4^2\nx1^3 + x2*x4^2").unwrap();
        let c = s.compile();
        let x = [3i64, -2, 5, 7];
        let whole = c.eval_i128(&x).unwrap();
        let mut sum = vec![0i128; c.r()];
        for comp in c.components() {
            let sub = c.restrict(&comp);
            let xs: Vec<i64> = comp.iter().map(|&j| x[j]).collect();
            for (a, b) in sum.iter_mut().zip(sub.eval_i128(&xs).unwrap()) {
                *a += b;
            }
        }
        assert_eq!(whole, sum);
    }

    #[test]
    fn modular_and_float_paths_agree_with_exact() {
        let s = parse_system("vars 3\n2*x1^2*x2 - 7*x3^3 + x1*x2*x3\nx1^2 - x3^2").unwrap();
        let c = s.compile();
        let x = [4i64, 9, 11];
        let exact = c.eval_i128(&x).unwrap();
        let m = c.reduce_mod(97);
        let xm: Vec<u64> = x.iter().map(|&v| v as u64 % 97).collect();
        let got = m.eval(&xm);
        for (e, g) in exact.iter().zip(got) {
            assert_eq!(e.rem_euclid(97) as u64, g);
        }
        let xf: Vec<f64> = x.iter().map(|&v| v as f64).collect();
        for (e, g) in exact.iter().zip(c.eval_f64(&xf)) {
            assert!((*e as f64 - g).abs() < 1e-9);
        }
    }

    #[test]
    fn overflow_falls_back_to_bigint() {
        let s = parse_system("vars 2\nx1^9 - x2^9").unwrap().compile();
        let x = [1i64 << 20, 3];
        assert!(s.eval_i128(&x).is_none());
        assert!(!s.vanishes_at(&x));
        assert!(s.vanishes_at(&[1 << 20, 1 << 20]));
    }
}

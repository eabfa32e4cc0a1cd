//! `S_F(alpha)`, the `Lambda`-weighted exponential sum over the box.

use super::enumerate::Support;
use crate::error::{Error, Result};
use crate::numeric::dd::{expi, phase_of, roots_of_unity};
use crate::numeric::{reduce, CDd, Dd};
use crate::poly::CompiledSystem;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpSumSample {
    pub alpha: Vec<f64>,
    pub re: f64,
    pub im: f64,
    /// `|S_F(alpha)| / P^n`.
    pub normalized: f64,
    #[serde(skip)]
    pub value: CDd,
}

/// Precomputed supports and components for repeated evaluation.
#[derive(Debug, Clone)]
pub struct ExpSum {
    pub p: u64,
    n: usize,
    parts: Vec<(Vec<usize>, CompiledSystem)>,
    sup: Vec<Support>,
}

fn decode(mut i: u64, vars: &[usize], sup: &[Support], x: &mut [i64], w: &mut f64) {
    *w = 1.0;
    for (t, &j) in vars.iter().enumerate() {
        let len = sup[j].len() as u64;
        let k = (i % len) as usize;
        i /= len;
        x[t] = sup[j].values[k] as i64;
        *w *= sup[j].weight(k);
    }
}

impl ExpSum {
    pub fn new(sys: &CompiledSystem, p: u64, sup: Vec<Support>) -> Self {
        let parts = sys
            .components()
            .into_iter()
            .map(|c| {
                let s = sys.restrict(&c);
                (c, s)
            })
            .collect();
        ExpSum {
            p,
            n: sys.n,
            parts,
            sup,
        }
    }

    pub fn r(&self) -> usize {
        self.parts.first().map_or(0, |(_, s)| s.r())
    }

    /// Work per evaluation: the summed sizes of the component ranges.
    pub fn cost(&self) -> u128 {
        self.parts
            .iter()
            .map(|(vars, _)| {
                vars.iter().fold(1u128, |acc, &j| {
                    acc.saturating_mul(self.sup[j].len() as u128)
                })
            })
            .fold(0u128, |a, b| a.saturating_add(b))
    }

    /// The sum at `alpha`, given in double-double so that `alpha + 1` is
    /// representable exactly. Each coordinate is reduced mod 1 first, which
    /// the integrality of `F` permits.
    pub fn eval(&self, alpha: &[Dd]) -> Result<ExpSumSample> {
        if alpha.len() != self.r() {
            return Err(Error::invalid(format!(
                "alpha has {} entries, the system has {} forms",
                alpha.len(),
                self.r()
            )));
        }
        let alpha: Vec<Dd> = alpha.iter().map(|a| a.frac()).collect();
        let mut total = CDd::ONE;
        for (vars, part) in &self.parts {
            total = total * self.component(vars, part, &alpha)?;
        }
        let (re, im) = total.to_pair();
        Ok(ExpSumSample {
            alpha: alpha.iter().map(|a| a.to_f64()).collect(),
            re,
            im,
            normalized: re.hypot(im) / (self.p as f64).powi(self.n as i32),
            value: total,
        })
    }

    fn component(&self, vars: &[usize], part: &CompiledSystem, alpha: &[Dd]) -> Result<CDd> {
        let size = vars
            .iter()
            .fold(1u64, |acc, &j| acc.saturating_mul(self.sup[j].len() as u64));
        let overflow = std::sync::atomic::AtomicBool::new(false);
        let sum = reduce::chunked(
            size,
            reduce::CHUNK,
            CDd::ZERO,
            |range| {
                let mut acc = CDd::ZERO;
                let mut x = vec![0i64; vars.len()];
                let mut w = 1.0;
                for i in range {
                    decode(i, vars, &self.sup, &mut x, &mut w);
                    let Some(values) = part.eval_i128(&x) else {
                        overflow.store(true, std::sync::atomic::Ordering::Relaxed);
                        continue;
                    };
                    let mut phase = Dd::ZERO;
                    for (a, &v) in alpha.iter().zip(&values) {
                        phase = phase + phase_of(a.hi, v) + phase_of(a.lo, v);
                    }
                    acc += expi(phase).scale(w);
                }
                acc
            },
            |a, b| a + b,
        );
        if overflow.into_inner() {
            return Err(Error::invalid("form values exceed 128 bits"));
        }
        Ok(sum)
    }

    /// The sum at `alpha = a/q`, grouping `x` by residue class: each
    /// coordinate contributes `W_j(h) = sum of Lambda(x) over x = h mod q`
    /// and the phase depends on `h` only.
    pub fn eval_rational(&self, a: &[u64], q: u64) -> Result<CDd> {
        if a.len() != self.r() || q == 0 {
            return Err(Error::invalid("need R numerators and q >= 1"));
        }
        let roots = roots_of_unity(q);
        let buckets: Vec<Vec<f64>> = self
            .sup
            .iter()
            .map(|s| {
                let mut b = vec![0.0; q as usize];
                for (i, &m) in s.values.iter().enumerate() {
                    b[(m % q) as usize] += s.weight(i);
                }
                b
            })
            .collect();
        let mut total = CDd::ONE;
        for (vars, part) in &self.parts {
            let ms = part.reduce_mod(q);
            let size = (q as u128).pow(vars.len() as u32);
            if size > 1 << 32 {
                return Err(Error::budget("residue class sum", size, 1 << 32));
            }
            let mut acc = CDd::ZERO;
            let mut h = vec![0u64; vars.len()];
            for i in 0..size as u64 {
                let mut t = i;
                let mut w = 1.0;
                for (k, &j) in vars.iter().enumerate() {
                    h[k] = t % q;
                    t /= q;
                    w *= buckets[j][h[k] as usize];
                }
                if w == 0.0 {
                    continue;
                }
                let vals = ms.eval(&h);
                let idx = a.iter().zip(&vals).fold(0u128, |s, (&ai, &v)| {
                    (s + ai as u128 * v as u128) % q as u128
                });
                acc += roots[idx as usize].scale(w);
            }
            total = total * acc;
        }
        Ok(total)
    }
}

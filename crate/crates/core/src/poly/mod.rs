//! Exact integer polynomial systems.
//!
//! [`PolySystem`] is the canonical, validated object; [`CompiledSystem`] is a
//! flat term list used by the numeric kernels (modular, `i128`, `f64`).

pub mod compiled;
mod decompose;
mod parse;
pub(crate) mod rank;

pub use compiled::{CTerm, CompiledSystem, ModSystem};
pub use decompose::{decompose, top_block_rank, Decomposition, FormSplit, VarPartition};
pub use parse::{parse_json, parse_system, parse_text};
pub use rank::{jacobian_rank, rank_mod_p, rank_rational, RankMode};

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

/// `coeff * x^exps`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial {
    pub coeff: BigInt,
    pub exps: Vec<u32>,
}

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.exps.iter().sum()
    }

    /// Variables with a positive exponent.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.exps
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(i, _)| i)
    }
}

/// Graded lexicographic comparison, larger first.
pub fn grlex_cmp(a: &[u32], b: &[u32]) -> Ordering {
    let da: u32 = a.iter().sum();
    let db: u32 = b.iter().sum();
    db.cmp(&da).then_with(|| b.cmp(a))
}

/// Merges like terms, drops zeros and sorts into graded-lex order.
pub fn canonicalize(monomials: impl IntoIterator<Item = Monomial>) -> Vec<Monomial> {
    let mut acc: BTreeMap<Vec<u32>, BigInt> = BTreeMap::new();
    for m in monomials {
        *acc.entry(m.exps).or_insert_with(BigInt::zero) += m.coeff;
    }
    let mut out: Vec<Monomial> = acc
        .into_iter()
        .filter(|(_, c)| !c.is_zero())
        .map(|(exps, coeff)| Monomial { coeff, exps })
        .collect();
    out.sort_by(|a, b| grlex_cmp(&a.exps, &b.exps));
    out
}

/// A homogeneous polynomial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Form {
    pub degree: u32,
    pub monomials: Vec<Monomial>,
}

impl Form {
    /// Builds a form from arbitrary monomials, checking homogeneity.
    pub fn new(n: usize, monomials: Vec<Monomial>) -> Result<Self> {
        if monomials.iter().any(|m| m.exps.len() != n) {
            return Err(Error::invalid("exponent vector length differs from n"));
        }
        let monomials = canonicalize(monomials);
        let first = monomials.first().ok_or(Error::ZeroPolynomial { line: 0 })?;
        let degree = first.degree();
        if monomials.iter().any(|m| m.degree() != degree) {
            let mut found: Vec<u32> = monomials.iter().map(Monomial::degree).collect();
            found.sort_unstable();
            found.dedup();
            return Err(Error::NonHomogeneous { line: 0, found });
        }
        Ok(Form { degree, monomials })
    }

    pub fn n(&self) -> usize {
        self.monomials.first().map_or(0, |m| m.exps.len())
    }

    pub fn evaluate(&self, x: &[BigInt]) -> BigInt {
        let mut acc = BigInt::zero();
        for m in &self.monomials {
            let mut t = m.coeff.clone();
            for (xi, &e) in x.iter().zip(&m.exps) {
                if e > 0 {
                    t *= num_traits::pow(xi.clone(), e as usize);
                }
            }
            acc += t;
        }
        acc
    }

    pub fn evaluate_rational(&self, x: &[BigRational]) -> BigRational {
        let mut acc = BigRational::zero();
        for m in &self.monomials {
            let mut t = BigRational::from_integer(m.coeff.clone());
            for (xi, &e) in x.iter().zip(&m.exps) {
                if e > 0 {
                    t *= num_traits::pow(xi.clone(), e as usize);
                }
            }
            acc += t;
        }
        acc
    }

    /// Partial derivative with respect to variable `j`, as a monomial list.
    pub fn derivative(&self, j: usize) -> Vec<Monomial> {
        self.monomials
            .iter()
            .filter(|m| m.exps[j] > 0)
            .map(|m| {
                let mut exps = m.exps.clone();
                let e = exps[j];
                exps[j] -= 1;
                Monomial {
                    coeff: &m.coeff * BigInt::from(e),
                    exps,
                }
            })
            .collect()
    }
}

fn eval_monomials_rational(ms: &[Monomial], x: &[BigRational]) -> BigRational {
    let mut acc = BigRational::zero();
    for m in ms {
        let mut t = BigRational::from_integer(m.coeff.clone());
        for (xi, &e) in x.iter().zip(&m.exps) {
            if e > 0 {
                t *= num_traits::pow(xi.clone(), e as usize);
            }
        }
        acc += t;
    }
    acc
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&monomials_to_text(&self.monomials))
    }
}

/// Renders monomials in the text grammar; `0` for the empty list.
pub fn monomials_to_text(ms: &[Monomial]) -> String {
    if ms.is_empty() {
        return "0".into();
    }
    let mut s = String::new();
    for (k, m) in ms.iter().enumerate() {
        let neg = m.coeff.is_negative();
        if k == 0 {
            if neg {
                s.push('-');
            }
        } else {
            s.push_str(if neg { " - " } else { " + " });
        }
        let c = m.coeff.abs();
        let mut factors: Vec<String> = Vec::new();
        if !c.is_one() || m.degree() == 0 {
            factors.push(c.to_string());
        }
        for (i, &e) in m.exps.iter().enumerate() {
            match e {
                0 => {}
                1 => factors.push(format!("x{}", i + 1)),
                _ => factors.push(format!("x{}^{}", i + 1, e)),
            }
        }
        s.push_str(&factors.join("*"));
    }
    s
}

/// A system of forms grouped by degree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolySystem {
    n: usize,
    forms_by_degree: BTreeMap<u32, Vec<Form>>,
}

impl PolySystem {
    pub fn new(n: usize, forms: Vec<Form>) -> Result<Self> {
        if forms.is_empty() {
            return Err(Error::EmptySystem);
        }
        let mut forms_by_degree: BTreeMap<u32, Vec<Form>> = BTreeMap::new();
        for f in forms {
            if f.monomials.is_empty() {
                return Err(Error::ZeroPolynomial { line: 0 });
            }
            if f.n() != n {
                return Err(Error::invalid("form and system disagree on n"));
            }
            if f.degree < 2 {
                return Err(Error::DegreeTooLow {
                    line: 0,
                    degree: f.degree,
                });
            }
            forms_by_degree.entry(f.degree).or_default().push(f);
        }
        Ok(PolySystem { n, forms_by_degree })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn forms_by_degree(&self) -> &BTreeMap<u32, Vec<Form>> {
        &self.forms_by_degree
    }

    /// Forms ordered by (degree ascending, index ascending).
    pub fn forms(&self) -> impl Iterator<Item = &Form> {
        self.forms_by_degree.values().flatten()
    }

    /// Total number of forms `R`.
    pub fn r(&self) -> usize {
        self.forms_by_degree.values().map(Vec::len).sum()
    }

    /// Degree of each row in evaluation order.
    pub fn degrees(&self) -> Vec<u32> {
        self.forms().map(|f| f.degree).collect()
    }

    pub fn max_degree(&self) -> u32 {
        *self.forms_by_degree.keys().next_back().unwrap_or(&0)
    }

    /// Exact values, one per form.
    pub fn evaluate(&self, x: &[BigInt]) -> Result<Vec<BigInt>> {
        self.check_len(x.len())?;
        Ok(self.forms().map(|f| f.evaluate(x)).collect())
    }

    /// Convenience wrapper over [`PolySystem::evaluate`] for `i64` points.
    pub fn evaluate_i64(&self, x: &[i64]) -> Result<Vec<BigInt>> {
        let x: Vec<BigInt> = x.iter().map(|&v| BigInt::from(v)).collect();
        self.evaluate(&x)
    }

    /// Values reduced into `0..q`.
    pub fn evaluate_mod(&self, x: &[BigInt], q: &BigInt) -> Result<Vec<BigInt>> {
        if q.is_zero() || q.is_negative() {
            return Err(Error::invalid("modulus must be positive"));
        }
        self.check_len(x.len())?;
        let xr: Vec<BigInt> = x.iter().map(|v| v.mod_floor_pos(q)).collect();
        Ok(self
            .forms()
            .map(|f| {
                let mut acc = BigInt::zero();
                for m in &f.monomials {
                    let mut t = m.coeff.mod_floor_pos(q);
                    for (xi, &e) in xr.iter().zip(&m.exps) {
                        if e > 0 {
                            t = (t * xi.modpow(&BigInt::from(e), q)) % q;
                        }
                    }
                    acc = (acc + t) % q;
                }
                acc
            })
            .collect())
    }

    /// The `R x n` Jacobian at a rational point.
    pub fn jacobian(&self, x: &[BigRational]) -> Result<Vec<Vec<BigRational>>> {
        self.check_len(x.len())?;
        Ok(self
            .forms()
            .map(|f| {
                (0..self.n)
                    .map(|j| eval_monomials_rational(&f.derivative(j), x))
                    .collect()
            })
            .collect())
    }

    /// Jacobian at an integer point.
    pub fn jacobian_int(&self, x: &[BigInt]) -> Result<Vec<Vec<BigInt>>> {
        let xr: Vec<BigRational> = x.iter().cloned().map(BigRational::from_integer).collect();
        Ok(self
            .jacobian(&xr)?
            .into_iter()
            .map(|row| row.into_iter().map(|v| v.to_integer()).collect())
            .collect())
    }

    /// Values at a rational point.
    pub fn evaluate_rational(&self, x: &[BigRational]) -> Result<Vec<BigRational>> {
        self.check_len(x.len())?;
        Ok(self.forms().map(|f| f.evaluate_rational(x)).collect())
    }

    /// Subsystem made of the forms of one degree.
    pub fn block(&self, d: u32) -> Option<PolySystem> {
        self.forms_by_degree.get(&d).map(|fs| PolySystem {
            n: self.n,
            forms_by_degree: BTreeMap::from([(d, fs.clone())]),
        })
    }

    pub fn compile(&self) -> CompiledSystem {
        CompiledSystem::from_system(self)
    }

    /// Renders the system in the text grammar (header plus one form per line).
    pub fn to_text(&self) -> String {
        let mut s = format!("vars {}\n", self.n);
        for f in self.forms() {
            s.push_str(&f.to_string());
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> JsonSystem {
        JsonSystem {
            n: self.n,
            forms: self
                .forms()
                .map(|f| JsonForm {
                    degree: f.degree,
                    monomials: f
                        .monomials
                        .iter()
                        .map(|m| JsonMonomial {
                            c: m.coeff.to_string(),
                            e: m.exps.clone(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::invalid(format!(
                "point has {len} coordinates, system has {} variables",
                self.n
            )));
        }
        Ok(())
    }
}

/// Structured JSON form of a system.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct JsonSystem {
    pub n: usize,
    pub forms: Vec<JsonForm>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct JsonForm {
    pub degree: u32,
    pub monomials: Vec<JsonMonomial>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct JsonMonomial {
    pub c: String,
    pub e: Vec<u32>,
}

trait ModFloorPos {
    fn mod_floor_pos(&self, q: &BigInt) -> BigInt;
}

impl ModFloorPos for BigInt {
    fn mod_floor_pos(&self, q: &BigInt) -> BigInt {
        let r = self % q;
        if r.is_negative() {
            r + q
        } else {
            r
        }
    }
}

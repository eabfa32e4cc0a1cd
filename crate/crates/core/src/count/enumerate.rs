//! Exact weighted counts `N_F(P)` by full enumeration or hash-join.

use super::sieve::{sieve_lambda, LambdaTable};
use crate::arch::BoxRegion;
use crate::error::{Error, Result};
use crate::numeric::reduce;
use crate::poly::CompiledSystem;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Full,
    #[default]
    Auto,
}

impl std::str::FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Strategy::Full),
            "auto" | "hash-join" => Ok(Strategy::Auto),
            other => Err(Error::invalid(format!(
                "unknown strategy '{other}' (full|auto)"
            ))),
        }
    }
}

/// Default ceiling on enumeration work (tuples visited).
pub const DEFAULT_MAX_COST: u128 = 400_000_000;

/// One coordinate's support: prime powers in `(b'P, b''P]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Support {
    pub values: Vec<u64>,
    pub base: Vec<u64>,
}

impl Support {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn weight(&self, i: usize) -> f64 {
        (self.base[i] as f64).ln()
    }
}

/// `floor(b P)` with `b` read as the shortest decimal that round-trips, so
/// that a bound written `0.95` snaps to `95` at `P = 100`.
pub fn snap(b: f64, p: u64) -> u64 {
    let text = format!("{b}");
    let (int, frac) = text.split_once('.').unwrap_or((&text, ""));
    let num: BigInt = format!("{int}{frac}").parse().expect("decimal digits");
    let den = BigInt::from(10u32).pow(frac.len() as u32);
    (num * BigInt::from(p))
        .div_floor(&den)
        .to_u64()
        .unwrap_or(0)
}

pub fn supports(table: &LambdaTable, region: &BoxRegion, p: u64) -> Vec<Support> {
    region
        .lo
        .iter()
        .zip(&region.hi)
        .map(|(&a, &b)| {
            let (lo, hi) = (snap(a, p) + 1, snap(b, p).min(table.p_max));
            let mut s = Support {
                values: Vec::new(),
                base: Vec::new(),
            };
            for m in lo..=hi {
                if let Some(q) = table.base_prime(m) {
                    s.values.push(m);
                    s.base.push(q);
                }
            }
            s
        })
        .collect()
}

/// Multiset of `(base prime, is proper power)` over the coordinates of a
/// solution, sorted.
type Key = Vec<(u64, bool)>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountResult {
    pub p: u64,
    #[serde(rename = "box")]
    pub region: BoxRegion,
    /// `sum of Lambda(x_1)...Lambda(x_n)` over solutions in the box.
    pub weighted: f64,
    /// Solutions with every coordinate prime.
    pub unweighted: u128,
    /// Solutions with every coordinate a prime power.
    pub solutions: u128,
    /// First solutions in enumeration order (full enumeration only).
    pub examples: Option<Vec<Vec<u64>>>,
    pub strategy: &'static str,
    pub cost: u128,
}

const EXAMPLE_CAP: usize = 10;

/// Sums weights in key order so both strategies produce identical bits.
fn finish(map: &BTreeMap<Key, u128>) -> (f64, u128, u128) {
    let mut weighted = 0.0;
    let (mut prime, mut all) = (0u128, 0u128);
    for (key, &c) in map {
        let w: f64 = key.iter().map(|&(p, _)| (p as f64).ln()).product();
        weighted += c as f64 * w;
        all += c;
        if key.iter().all(|&(_, proper)| !proper) {
            prime += c;
        }
    }
    (weighted, prime, all)
}

fn merge(mut a: BTreeMap<Key, u128>, b: BTreeMap<Key, u128>) -> BTreeMap<Key, u128> {
    for (k, v) in b {
        *a.entry(k).or_default() += v;
    }
    a
}

/// Product of support sizes; saturates.
fn product_size(sup: &[Support], vars: &[usize]) -> u128 {
    vars.iter()
        .fold(1u128, |acc, &j| acc.saturating_mul(sup[j].len() as u128))
}

fn decode(mut i: u64, vars: &[usize], sup: &[Support], x: &mut [i64], idx: &mut [usize]) {
    for (t, &j) in vars.iter().enumerate() {
        let len = sup[j].len() as u64;
        let k = (i % len) as usize;
        i /= len;
        idx[t] = k;
        x[t] = sup[j].values[k] as i64;
    }
}

fn key_of(vars: &[usize], sup: &[Support], idx: &[usize]) -> Key {
    let mut key: Key = vars
        .iter()
        .zip(idx)
        .map(|(&j, &k)| (sup[j].base[k], sup[j].values[k] != sup[j].base[k]))
        .collect();
    key.sort_unstable();
    key
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Value {
    Small(Vec<i128>),
    Big(Vec<BigInt>),
}

fn value_of(sys: &CompiledSystem, x: &[i64], negate: bool) -> Value {
    match sys.eval_i128(x) {
        Some(v) if v.iter().all(|&t| t != i128::MIN) => Value::Small(if negate {
            v.iter().map(|&t| -t).collect()
        } else {
            v
        }),
        _ => {
            let v = sys.eval_big(x);
            let v = if negate {
                v.into_iter().map(|t| -t).collect()
            } else {
                v
            };
            // Keep a canonical representation for values that fit.
            match v.iter().map(|t| t.to_i128()).collect::<Option<Vec<_>>>() {
                Some(small) => Value::Small(small),
                None => Value::Big(v),
            }
        }
    }
}

fn full(sys: &CompiledSystem, sup: &[Support]) -> (BTreeMap<Key, u128>, Vec<Vec<u64>>) {
    let n = sys.n;
    let vars: Vec<usize> = (0..n).collect();
    let total = product_size(sup, &vars) as u64;
    reduce::chunked(
        total,
        reduce::CHUNK,
        (BTreeMap::new(), Vec::new()),
        |range| {
            let mut map = BTreeMap::new();
            let mut examples = Vec::new();
            let mut x = vec![0i64; n];
            let mut idx = vec![0usize; n];
            for i in range {
                decode(i, &vars, sup, &mut x, &mut idx);
                if sys.vanishes_at(&x) {
                    *map.entry(key_of(&vars, sup, &idx)).or_default() += 1;
                    if examples.len() < EXAMPLE_CAP {
                        examples.push(x.iter().map(|&v| v as u64).collect());
                    }
                }
            }
            (map, examples)
        },
        |(a, mut ea), (b, eb)| {
            ea.extend(eb);
            ea.truncate(EXAMPLE_CAP);
            (merge(a, b), ea)
        },
    )
}

/// Splits the variable components into two sides with balanced enumeration
/// cost. `None` when the system has a single component.
pub fn bipartition(sys: &CompiledSystem, sup: &[Support]) -> Option<(Vec<usize>, Vec<usize>)> {
    let mut comps = sys.components();
    if comps.len() < 2 {
        return None;
    }
    let log_size =
        |c: &Vec<usize>| -> f64 { c.iter().map(|&j| (sup[j].len().max(1) as f64).ln()).sum() };
    comps.sort_by(|a, b| log_size(b).total_cmp(&log_size(a)).then(a.cmp(b)));
    let (mut a, mut b) = (Vec::new(), Vec::new());
    let (mut la, mut lb) = (0.0, 0.0);
    for c in comps {
        let l = log_size(&c);
        if la <= lb {
            la += l;
            a.extend(c);
        } else {
            lb += l;
            b.extend(c);
        }
    }
    a.sort_unstable();
    b.sort_unstable();
    Some((a, b))
}

type Side = HashMap<Value, HashMap<Key, u128>>;

fn side_table(sys: &CompiledSystem, vars: &[usize], sup: &[Support]) -> Side {
    let part = sys.restrict(vars);
    let total = product_size(sup, vars) as u64;
    let mut out: Side = HashMap::new();
    let mut x = vec![0i64; vars.len()];
    let mut idx = vec![0usize; vars.len()];
    for i in 0..total {
        decode(i, vars, sup, &mut x, &mut idx);
        let v = value_of(&part, &x, false);
        *out.entry(v)
            .or_default()
            .entry(key_of(vars, sup, &idx))
            .or_default() += 1;
    }
    out
}

fn hash_join(
    sys: &CompiledSystem,
    sup: &[Support],
    a: &[usize],
    b: &[usize],
) -> BTreeMap<Key, u128> {
    let left = side_table(sys, a, sup);
    let part = sys.restrict(b);
    let total = product_size(sup, b) as u64;
    reduce::chunked(
        total,
        reduce::CHUNK,
        BTreeMap::new(),
        |range| {
            let mut map = BTreeMap::new();
            let mut x = vec![0i64; b.len()];
            let mut idx = vec![0usize; b.len()];
            for i in range {
                decode(i, b, sup, &mut x, &mut idx);
                let v = value_of(&part, &x, true);
                if let Some(bucket) = left.get(&v) {
                    let kb = key_of(b, sup, &idx);
                    for (ka, &c) in bucket {
                        let mut key = ka.clone();
                        key.extend_from_slice(&kb);
                        key.sort_unstable();
                        *map.entry(key).or_default() += c;
                    }
                }
            }
            map
        },
        merge,
    )
}

/// `N_F(P)`: the `Lambda`-weighted number of integer zeros in `P` times the
/// box. `Auto` uses a hash-join across a syntactic bipartition when one
/// exists and is cheaper.
pub fn count_prime_solutions(
    sys: &CompiledSystem,
    region: &BoxRegion,
    p: u64,
    strategy: Strategy,
    max_cost: u128,
) -> Result<CountResult> {
    if p < 2 {
        return Err(Error::invalid("P must be at least 2"));
    }
    if region.dim() != sys.n {
        return Err(Error::invalid(format!(
            "box has {} coordinates, the system has {} variables",
            region.dim(),
            sys.n
        )));
    }
    let table = sieve_lambda(p)?;
    let sup = supports(&table, region, p);
    count_with_supports(sys, region, p, &sup, strategy, max_cost)
}

pub(crate) fn count_with_supports(
    sys: &CompiledSystem,
    region: &BoxRegion,
    p: u64,
    sup: &[Support],
    strategy: Strategy,
    max_cost: u128,
) -> Result<CountResult> {
    let all: Vec<usize> = (0..sys.n).collect();
    let full_cost = product_size(sup, &all);
    let split = match strategy {
        Strategy::Full => None,
        Strategy::Auto => bipartition(sys, sup),
    };
    let join_cost = split
        .as_ref()
        .map(|(a, b)| product_size(sup, a).saturating_add(product_size(sup, b)));
    let use_join = matches!(join_cost, Some(c) if c < full_cost);
    let cost = if use_join {
        join_cost.unwrap()
    } else {
        full_cost
    };
    if cost > max_cost {
        let what = if use_join {
            "hash-join count"
        } else {
            "full enumeration count"
        };
        return Err(Error::budget(what, cost, max_cost));
    }
    let (map, examples, tag) = if use_join {
        let (a, b) = split.unwrap();
        (hash_join(sys, sup, &a, &b), None, "hash-join")
    } else {
        let (m, e) = full(sys, sup);
        (m, Some(e), "full")
    };
    let (weighted, unweighted, solutions) = finish(&map);
    Ok(CountResult {
        p,
        region: region.clone(),
        weighted,
        unweighted,
        solutions,
        examples,
        strategy: tag,
        cost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_system;

    fn compile(text: &str) -> CompiledSystem {
        parse_system(text).unwrap().compile()
    }

    #[test]
    fn snapping_reads_decimals() {
        assert_eq!(snap(0.95, 100), 95);
        assert_eq!(snap(0.1, 100), 10);
        assert_eq!(snap(0.1, 2000), 200);
        assert_eq!(snap(0.333, 1000), 333);
        assert_eq!(snap(0.5, 3), 1);
    }

    #[test]
    fn difference_of_squares_is_the_diagonal() {
        let sys = compile("vars 2\nx1^2 - x2^2");
        let region = BoxRegion::cube(2, 0.1, 0.95).unwrap();
        let res =
            count_prime_solutions(&sys, &region, 100, Strategy::Full, DEFAULT_MAX_COST).unwrap();
        let table = sieve_lambda(100).unwrap();
        let oracle: f64 = (11..=95).map(|m| table.lambda(m).powi(2)).sum();
        assert!((res.weighted - oracle).abs() < 1e-9 * oracle);
        let primes = (11..=95).filter(|&m| table.is_prime(m)).count() as u128;
        let powers = (11..=95).filter(|&m| table.lambda(m) > 0.0).count() as u128;
        assert_eq!(res.unweighted, primes);
        assert_eq!(res.solutions, powers);
        assert_eq!(res.examples.as_ref().unwrap()[0], vec![11, 11]);
        assert_eq!(res.examples.as_ref().unwrap().len(), EXAMPLE_CAP);
    }

    #[test]
    fn empty_support_counts_zero() {
        let sys = compile("vars 2\nx1^2 - x2^2");
        let region = BoxRegion::cube(2, 0.5, 0.6).unwrap();
        let res =
            count_prime_solutions(&sys, &region, 3, Strategy::Auto, DEFAULT_MAX_COST).unwrap();
        assert_eq!(res.weighted, 0.0);
        assert_eq!(res.solutions, 0);
    }

    #[test]
    fn strategies_agree_bit_for_bit() {
        let sys = compile("vars 4\nx1^2 + x2^2 - x3^2 - x4^2");
        let region = BoxRegion::cube(4, 0.1, 0.95).unwrap();
        let full =
            count_prime_solutions(&sys, &region, 120, Strategy::Full, DEFAULT_MAX_COST).unwrap();
        let join =
            count_prime_solutions(&sys, &region, 120, Strategy::Auto, DEFAULT_MAX_COST).unwrap();
        assert_eq!(join.strategy, "hash-join");
        assert_eq!(full.weighted.to_bits(), join.weighted.to_bits());
        assert_eq!(full.unweighted, join.unweighted);
        assert_eq!(full.solutions, join.solutions);
        assert!(full.solutions > 0);
    }

    #[test]
    fn mixed_monomials_against_triple_loop() {
        let sys = compile("vars 3\nx1*x2 - x3^2");
        let region = BoxRegion::cube(3, 0.1, 0.9).unwrap();
        let res =
            count_prime_solutions(&sys, &region, 60, Strategy::Auto, DEFAULT_MAX_COST).unwrap();
        assert_eq!(res.strategy, "hash-join");
        let full =
            count_prime_solutions(&sys, &region, 60, Strategy::Full, DEFAULT_MAX_COST).unwrap();
        assert_eq!(full.weighted.to_bits(), res.weighted.to_bits());
        // x1 x2 = x3^2 in prime powers: x1 = x2 = x3 prime, or all powers of
        // one prime with a + b = 2c.
        let table = sieve_lambda(60).unwrap();
        let mut oracle = 0.0;
        for a in 7..=54u64 {
            for b in 7..=54u64 {
                for c in 7..=54u64 {
                    if a * b == c * c {
                        oracle += table.lambda(a) * table.lambda(b) * table.lambda(c);
                    }
                }
            }
        }
        assert!((res.weighted - oracle).abs() < 1e-9 * oracle);
    }

    #[test]
    fn single_component_uses_full() {
        let sys = compile("vars 3\nx1*x2 - x2*x3");
        let region = BoxRegion::cube(3, 0.1, 0.9).unwrap();
        let res =
            count_prime_solutions(&sys, &region, 60, Strategy::Auto, DEFAULT_MAX_COST).unwrap();
        assert_eq!(res.strategy, "full");
        let table = sieve_lambda(60).unwrap();
        let s1: f64 = (7..=54).map(|m| table.lambda(m)).sum();
        let s2: f64 = (7..=54).map(|m| table.lambda(m).powi(2)).sum();
        assert!((res.weighted - s1 * s2).abs() < 1e-9 * s1 * s2);
    }

    #[test]
    fn refuses_past_max_cost() {
        let sys = compile("vars 4\nx1^2 + x2^2 - x3^2 - x4^2");
        let region = BoxRegion::cube(4, 0.1, 0.95).unwrap();
        let err = count_prime_solutions(&sys, &region, 200, Strategy::Full, 1000).unwrap_err();
        assert!(matches!(err, Error::Budget { cost, .. } if cost > 1000));
    }
}

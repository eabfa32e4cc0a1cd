//! Unit-solution counts, local densities, Gauss sums, truncated singular
//! series, Euler products and Hensel witnesses.

pub mod engine;
pub mod lift;

pub use engine::Budget;

use crate::error::{Error, Result};
use crate::numeric::{
    dd::roots_of_unity, factorize, gcd, is_prime, mobius, primes_up_to, rng, totient, units_mod,
    valuation, CDd,
};
use crate::poly::{rank::rank_mod_p_inplace, CompiledSystem, PolySystem};
use crate::report::{ratio_to_f64, Provenance, Quantity};
use engine::{
    count_zero, gauss_from_histograms, gauss_total, overflow, projective_points, ASet, Components,
    Filter,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::Mutex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct UnitCount {
    pub q: u64,
    pub value: u128,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalDensity {
    pub p: u64,
    /// `p^{Rk} N(p^k) / phi(p^k)^n` for `k = 1..`.
    #[serde(serialize_with = "ser_rationals")]
    pub values: Vec<BigRational>,
    pub stabilized: bool,
    pub stabilization_k: Option<u32>,
    /// Levels from this one on were not scanned; they repeat the
    /// stabilized value.
    pub filled_from: Option<u32>,
    /// First level whose scan exceeded the budget, when the sequence is
    /// incomplete.
    pub budget_exhausted_at: Option<u32>,
}

impl LocalDensity {
    /// The stabilized value, or the last computed one.
    pub fn value(&self) -> Option<&BigRational> {
        match self.stabilization_k {
            Some(k) => self.values.get(k as usize - 1),
            None => self.values.last(),
        }
    }
}

fn ser_rationals<S: serde::Serializer>(
    v: &[BigRational],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&Quantity::rational(x))?;
    }
    seq.end()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussSumValue {
    pub q: u64,
    pub a: Vec<u64>,
    pub re: f64,
    pub im: f64,
    #[serde(skip)]
    pub value: CDd,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BValue {
    pub q: u64,
    pub re: f64,
    pub im: f64,
    /// `phi(q)^n`, the normalizer.
    pub phi_n: f64,
}

impl BValue {
    pub fn term(&self) -> f64 {
        self.re / self.phi_n
    }
}

/// How the per-`q` terms of the singular series are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesMethod {
    /// Direct sums of Gauss sums over primitive `a`.
    Gauss,
    /// Mobius inversion of exact unit counts over the divisors of `q`.
    Exact,
    /// Gauss sums when within budget, exact otherwise.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesTerm {
    pub q: u64,
    pub b_re: f64,
    pub b_im: f64,
    pub term: f64,
    pub method: SeriesMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesTruncation {
    pub h: u64,
    pub partial: Quantity,
    pub terms: Vec<SeriesTerm>,
    /// Slope of `log max |term(q)|` over dyadic blocks against `log q`.
    pub fitted_exponent: Option<f64>,
    pub tail_exponent_note: String,
}

impl SeriesTruncation {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("q,Bq_re,Bq_im,term\n");
        for t in &self.terms {
            s.push_str(&format!("{},{:e},{:e},{:e}\n", t.q, t.b_re, t.b_im, t.term));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EulerFactor {
    pub p: u64,
    pub value: Quantity,
    pub stabilized: bool,
    pub stabilization_k: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EulerProduct {
    pub p_max: u64,
    pub value: Quantity,
    pub factors: Vec<EulerFactor>,
    /// Some factor had not stabilized within the level budget.
    pub provisional: bool,
    pub unstabilized: Vec<u64>,
    /// Primes with `S_p = 0`.
    pub obstructions: Vec<u64>,
    #[serde(skip)]
    pub exact: BigRational,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum HenselOutcome {
    /// Nonsingular unit zero mod `p`.
    Witness,
    /// Unit zero mod `p^k` where every partial derivative of the single
    /// form has valuation `delta < k/2`; it lifts to a nonsingular
    /// `p`-adic unit zero.
    LiftedWitness {
        delta: u32,
    },
    /// No unit zero mod `p^level`.
    Obstruction {
        level: u32,
    },
    Inconclusive {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HenselWitness {
    pub p: u64,
    pub k: u32,
    pub h: Option<Vec<u64>>,
    pub outcome: HenselOutcome,
}

impl HenselWitness {
    pub fn is_witness(&self) -> bool {
        matches!(
            self.outcome,
            HenselOutcome::Witness | HenselOutcome::LiftedWitness { .. }
        )
    }

    pub fn obstruction_level(&self) -> Option<u32> {
        match self.outcome {
            HenselOutcome::Obstruction { level } => Some(level),
            _ => None,
        }
    }
}

/// Local computations for one system with a shared count cache.
pub struct Local {
    compiled: CompiledSystem,
    comps: Components,
    degrees: Vec<u32>,
    pub budget: Budget,
    cache: Mutex<HashMap<u64, u128>>,
}

fn phi_pow(q: u64, n: usize) -> BigInt {
    BigInt::from(totient(q)).pow(n as u32)
}

impl Local {
    pub fn new(sys: &PolySystem, budget: Budget) -> Self {
        let compiled = sys.compile();
        let comps = Components::from_compiled(&compiled);
        Local {
            compiled,
            comps,
            degrees: sys.degrees(),
            budget,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn n(&self) -> usize {
        self.compiled.n
    }

    pub fn r(&self) -> usize {
        self.compiled.r()
    }

    /// Number of variable components the counts factor over.
    pub fn component_count(&self) -> usize {
        self.comps.parts.len()
    }

    fn check_q(q: u64) -> Result<()> {
        if q == 0 {
            Err(Error::invalid("modulus must be at least 1"))
        } else {
            Ok(())
        }
    }

    /// `N(q)` by convolving component histograms mod `q` directly.
    pub fn count_direct(&self, q: u64) -> Result<u128> {
        Self::check_q(q)?;
        let h = self.comps.histograms(q, &Filter::None, &self.budget)?;
        count_zero(&h, &self.budget)
    }

    fn count_prime_power(&self, p: u64, k: u32) -> Result<u128> {
        let q = p.pow(k);
        if let Some(&v) = self.cache.lock().unwrap().get(&q) {
            return Ok(v);
        }
        let v = if self.comps.scan_cost(q) <= self.budget.max_scan {
            self.count_direct(q)
        } else {
            lift::lift_counts(&self.compiled, p, k, &self.budget).map(|v| v[k as usize - 1])
        }?;
        self.cache.lock().unwrap().insert(q, v);
        Ok(v)
    }

    /// `N(q)` as a product of prime-power counts.
    pub fn count(&self, q: u64) -> Result<UnitCount> {
        Self::check_q(q)?;
        let mut value = 1u128;
        for (p, k) in factorize(q) {
            let c = self.count_prime_power(p, k)?;
            value = value.checked_mul(c).ok_or_else(overflow)?;
        }
        Ok(UnitCount { q, value })
    }

    /// Unit zeros mod `p^k` that do not meet the lifting criterion: for one
    /// form, all partials divisible by `p^{ceil(k/2)}`; for several, the
    /// Jacobian singular mod `p`. Zero means the density is constant from
    /// level `k` on.
    pub fn bad_count(&self, p: u64, k: u32) -> Result<u128> {
        let q = p.pow(k);
        let filters: Vec<Filter> = if self.r() == 1 {
            vec![Filter::GradientDivisible(p.pow(k.div_ceil(2)))]
        } else {
            projective_points(p, self.r())
                .into_iter()
                .map(|lambda| Filter::LambdaGradient { p, lambda })
                .collect()
        };
        let mut total = 0u128;
        for f in &filters {
            let h = self.comps.histograms(q, f, &self.budget)?;
            total += count_zero(&h, &self.budget)?;
            if total > 0 {
                break;
            }
        }
        Ok(total)
    }

    /// `p^{Rk} N(p^k) / phi(p^k)^n`.
    pub fn density_at(&self, p: u64, k: u32) -> Result<BigRational> {
        let q = p.pow(k);
        let count = self.count_prime_power(p, k)?;
        let num = BigInt::from(q).pow(self.r() as u32) * BigInt::from(count);
        Ok(BigRational::new(num, phi_pow(q, self.n())))
    }

    /// Level past stabilization, scanned only when cheap.
    fn verify_density_at(&self, p: u64, k: u32) -> Result<BigRational> {
        let small = Budget {
            max_conv: self.budget.max_conv.min(200_000),
            max_scan: self.budget.max_scan.min(200_000),
            ..self.budget
        };
        let q = p.pow(k);
        let scan = self.comps.scan_cost(q);
        if scan > small.max_scan {
            return Err(Error::budget("verification scan", scan, small.max_scan));
        }
        let count = if let Some(&v) = self.cache.lock().unwrap().get(&q) {
            v
        } else {
            let h = self.comps.histograms(q, &Filter::None, &small)?;
            count_zero(&h, &small)?
        };
        let num = BigInt::from(q).pow(self.r() as u32) * BigInt::from(count);
        Ok(BigRational::new(num, phi_pow(q, self.n())))
    }

    /// Density sequence for `k = 1..=k_max`. Scanning stops one level past
    /// stabilization; later levels are filled with the stable value.
    pub fn density(&self, p: u64, k_max: u32) -> Result<LocalDensity> {
        if !is_prime(p) {
            return Err(Error::CompositeModulus(p));
        }
        if k_max == 0 {
            return Err(Error::invalid("k_max must be at least 1"));
        }
        let mut out = LocalDensity {
            p,
            values: Vec::new(),
            stabilized: false,
            stabilization_k: None,
            filled_from: None,
            budget_exhausted_at: None,
        };
        for k in 1..=k_max {
            if let Some(k0) = out.stabilization_k {
                if k > k0 + 1 {
                    let v = out.values[k0 as usize - 1].clone();
                    out.values.push(v);
                    out.filled_from.get_or_insert(k);
                    continue;
                }
            }
            if p.checked_pow(k).is_none() {
                out.budget_exhausted_at = Some(k);
                break;
            }
            let attempt = if out.stabilization_k.is_some() {
                self.verify_density_at(p, k)
            } else {
                self.density_at(p, k)
            };
            let v = match attempt {
                Ok(v) => v,
                Err(Error::Budget { .. }) => {
                    if let Some(k0) = out.stabilization_k {
                        let v = out.values[k0 as usize - 1].clone();
                        out.values.push(v);
                        out.filled_from.get_or_insert(k);
                        continue;
                    }
                    out.budget_exhausted_at = Some(k);
                    break;
                }
                Err(e) => return Err(e),
            };
            let zero = v.is_zero();
            out.values.push(v);
            if let Some(k0) = out.stabilization_k {
                if out.values[k0 as usize - 1] != *out.values.last().unwrap() {
                    return Err(Error::Invariant(format!(
                        "density at p = {p} changed after stabilization at level {k0}"
                    )));
                }
            } else {
                let stable = zero
                    || match self.bad_count(p, k) {
                        Ok(b) => b == 0,
                        Err(Error::Budget { .. }) => false,
                        Err(e) => return Err(e),
                    };
                if stable {
                    out.stabilized = true;
                    out.stabilization_k = Some(k);
                }
            }
        }
        Ok(out)
    }

    fn check_a(&self, a: &[u64]) -> Result<()> {
        if a.len() != self.r() {
            return Err(Error::invalid(format!(
                "a has {} entries, the system has {} forms",
                a.len(),
                self.r()
            )));
        }
        Ok(())
    }

    /// `C(q, a) = sum over unit h mod q of e(a.F(h)/q)`.
    pub fn gauss_sum(&self, q: u64, a: &[u64]) -> Result<GaussSumValue> {
        Self::check_q(q)?;
        self.check_a(a)?;
        let a: Vec<u64> = a.iter().map(|&x| x % q).collect();
        let h = self.comps.histograms(q, &Filter::None, &self.budget)?;
        let value = gauss_from_histograms(&h, &a, &roots_of_unity(q));
        let (re, im) = value.to_pair();
        Ok(GaussSumValue {
            q,
            a,
            re,
            im,
            value,
        })
    }

    /// `sum over all a mod q of C(q, a)`; equals `q^R N(q)`.
    pub fn gauss_total_all(&self, q: u64) -> Result<CDd> {
        Self::check_q(q)?;
        let h = self.comps.histograms(q, &Filter::None, &self.budget)?;
        gauss_total(&h, q, self.r(), ASet::All, &self.budget)
    }

    /// `B(q)`, the sum of `C(q, a)` over `a` with `gcd(a_1..a_R, q) = 1`.
    pub fn b_of_q(&self, q: u64) -> Result<BValue> {
        Self::check_q(q)?;
        let h = self.comps.histograms(q, &Filter::None, &self.budget)?;
        let v = gauss_total(&h, q, self.r(), ASet::Primitive, &self.budget)?;
        let (re, im) = v.to_pair();
        let phi_n = (totient(q) as f64).powi(self.n() as i32);
        if im.abs() > 1e-9 * phi_n.max(1.0) {
            return Err(Error::Invariant(format!(
                "B({q}) has imaginary part {im:e} beyond tolerance"
            )));
        }
        Ok(BValue { q, re, im, phi_n })
    }

    /// `B(q)/phi(q)^n = sum over d | q of mu(q/d) d^R N(d)/phi(d)^n`, exact.
    pub fn b_normalized_exact(&self, q: u64) -> Result<BigRational> {
        Self::check_q(q)?;
        let mut acc = BigRational::zero();
        for d in crate::numeric::divisors(q) {
            let mu = mobius(q / d);
            if mu == 0 {
                continue;
            }
            let n_d = self.count(d)?.value;
            let t = BigRational::new(
                BigInt::from(d).pow(self.r() as u32) * BigInt::from(n_d),
                phi_pow(d, self.n()),
            );
            if mu > 0 {
                acc += t;
            } else {
                acc -= t;
            }
        }
        Ok(acc)
    }

    fn gauss_cost(&self, q: u64) -> u128 {
        let per: u128 = self
            .comps
            .parts
            .iter()
            .map(|(v, _)| (totient(q) as u128).saturating_pow(v.len() as u32))
            .sum();
        (q as u128)
            .saturating_pow(self.r() as u32)
            .saturating_mul(per)
    }

    /// `S_F(H) = sum over q <= H of B(q)/phi(q)^n`.
    pub fn singular_series(&self, h: u64, method: SeriesMethod) -> Result<SeriesTruncation> {
        if h == 0 {
            return Err(Error::invalid("H must be at least 1"));
        }
        let mut terms = Vec::with_capacity(h as usize);
        let mut exact_sum = Some(BigRational::zero());
        let mut float_sum = 0f64;
        for q in 1..=h {
            let use_gauss = match method {
                SeriesMethod::Gauss => true,
                SeriesMethod::Exact => false,
                SeriesMethod::Auto => self.gauss_cost(q) <= self.budget.max_gauss / 64,
            };
            let t = if use_gauss {
                let b = self.b_of_q(q)?;
                exact_sum = None;
                SeriesTerm {
                    q,
                    b_re: b.re,
                    b_im: b.im,
                    term: b.term(),
                    method: SeriesMethod::Gauss,
                }
            } else {
                let e = self.b_normalized_exact(q)?;
                let term = ratio_to_f64(&e);
                let phi_n = (totient(q) as f64).powi(self.n() as i32);
                if let Some(s) = exact_sum.as_mut() {
                    *s += &e;
                }
                SeriesTerm {
                    q,
                    b_re: term * phi_n,
                    b_im: 0.0,
                    term,
                    method: SeriesMethod::Exact,
                }
            };
            float_sum += t.term;
            terms.push(t);
        }
        let partial = match exact_sum {
            Some(s) => Quantity {
                provenance: Provenance::Truncation,
                ..Quantity::rational(&s)
            },
            None => Quantity::estimate(float_sum, Provenance::Truncation, None),
        };
        Ok(SeriesTruncation {
            h,
            partial,
            fitted_exponent: fit_decay_exponent(&terms),
            terms,
            tail_exponent_note: "expected tail |S_F - S_F(H)| << H^(-1/2+eps)".into(),
        })
    }

    /// Product of stabilized local densities over `p <= p_max`.
    pub fn euler_product(&self, p_max: u64, k_max: u32) -> Result<EulerProduct> {
        if p_max < 2 {
            return Err(Error::invalid("p_max must be at least 2"));
        }
        let mut exact = BigRational::one();
        let mut factors = Vec::new();
        let mut unstabilized = Vec::new();
        let mut obstructions = Vec::new();
        for p in primes_up_to(p_max) {
            let d = self.density(p, k_max)?;
            let v = d
                .value()
                .cloned()
                .ok_or_else(|| Error::budget(format!("density at p = {p}"), 0, 0))?;
            if v.is_zero() {
                obstructions.push(p);
            } else if !d.stabilized {
                unstabilized.push(p);
            }
            exact *= &v;
            factors.push(EulerFactor {
                p,
                value: Quantity::rational(&v),
                stabilized: d.stabilized,
                stabilization_k: d.stabilization_k,
            });
        }
        Ok(EulerProduct {
            p_max,
            value: Quantity::rational(&exact),
            factors,
            provisional: !unstabilized.is_empty(),
            unstabilized,
            obstructions,
            exact,
        })
    }

    /// Level from which obstructions are reported: `2 max_d v_p(d) + 1`.
    fn report_level(&self, p: u64) -> u32 {
        2 * self
            .degrees
            .iter()
            .map(|&d| valuation(d as u64, p))
            .max()
            .unwrap_or(0)
            + 1
    }

    fn is_nonsingular_mod_p(&self, x: &[u64], p: u64) -> bool {
        let xp: Vec<u64> = x.iter().map(|&v| v % p).collect();
        let mut j = self.compiled.reduce_mod(p).jacobian(&xp, self.n());
        rank_mod_p_inplace(&mut j, p) == self.r()
    }

    fn lifted_delta(&self, x: &[u64], q: u64, p: u64, k: u32) -> Option<u32> {
        if self.r() != 1 {
            return None;
        }
        let j = self.compiled.reduce_mod(q).jacobian(x, self.n());
        let delta = j[0]
            .iter()
            .map(|&v| if v == 0 { k } else { valuation(v, p).min(k) })
            .min()
            .unwrap_or(k);
        (2 * delta < k).then_some(delta)
    }

    /// First unit zero mod `q` passing `accept`, exhaustive when the unit
    /// box fits the scan budget, else by `max_scan` random draws.
    fn find_zero<F>(&self, q: u64, seed: u64, accept: F) -> Option<Vec<u64>>
    where
        F: Fn(&[u64]) -> bool + Sync,
    {
        let n = self.n();
        let ms = self.compiled.reduce_mod(q);
        let units = units_mod(q);
        let nu = units.len() as u128;
        let total = nu.checked_pow(n as u32).unwrap_or(u128::MAX);
        let test = |x: &[u64]| ms.eval(x).iter().all(|&v| v == 0) && accept(x);
        if total <= self.budget.max_scan {
            let mut x = vec![0u64; n];
            for i in 0..total {
                let mut t = i;
                for v in x.iter_mut() {
                    *v = units[(t % nu) as usize];
                    t /= nu;
                }
                if test(&x) {
                    return Some(x);
                }
            }
            None
        } else {
            let mut r = rng::stream(seed, q);
            let draws = self.budget.max_scan.min(5_000_000);
            let mut x = vec![0u64; n];
            for _ in 0..draws {
                for v in x.iter_mut() {
                    *v = units[r.gen_range(0..units.len())];
                }
                if test(&x) {
                    return Some(x);
                }
            }
            None
        }
    }

    /// Searches for a nonsingular `p`-adic unit zero or a level with no
    /// unit zeros.
    pub fn hensel_check(&self, p: u64, k_budget: u32, seed: u64) -> Result<HenselWitness> {
        if !is_prime(p) {
            return Err(Error::CompositeModulus(p));
        }
        let k_budget = k_budget.max(1);
        if let Some(h) = self.find_zero(p, seed, |x| self.is_nonsingular_mod_p(x, p)) {
            return Ok(HenselWitness {
                p,
                k: 1,
                h: Some(h),
                outcome: HenselOutcome::Witness,
            });
        }
        let report = self.report_level(p).min(k_budget);
        let mut reason = String::from("no witness or empty level found within the level budget");
        for k in 1..=k_budget {
            let Some(q) = p.checked_pow(k) else { break };
            match self.count_prime_power(p, k) {
                Ok(0) => {
                    return Ok(HenselWitness {
                        p,
                        k: k.max(report),
                        h: None,
                        outcome: HenselOutcome::Obstruction {
                            level: k.max(report),
                        },
                    })
                }
                Ok(_) => {}
                Err(Error::Budget { what, .. }) => {
                    reason = format!("budget exceeded: {what}");
                    break;
                }
                Err(e) => return Err(e),
            }
            if k >= 2 && self.r() == 1 {
                if let Some(h) =
                    self.find_zero(q, seed, |x| self.lifted_delta(x, q, p, k).is_some())
                {
                    let delta = self.lifted_delta(&h, q, p, k).unwrap();
                    return Ok(HenselWitness {
                        p,
                        k,
                        h: Some(h),
                        outcome: HenselOutcome::LiftedWitness { delta },
                    });
                }
            }
        }
        Ok(HenselWitness {
            p,
            k: k_budget,
            h: None,
            outcome: HenselOutcome::Inconclusive { reason },
        })
    }
}

/// Least-squares slope of `log max |term|` over dyadic blocks
/// `[2^j, 2^{j+1})` against the log of the block midpoint.
pub fn fit_decay_exponent(terms: &[SeriesTerm]) -> Option<f64> {
    let mut blocks: Vec<(f64, f64)> = Vec::new();
    let mut lo = 2u64;
    let max_q = terms.iter().map(|t| t.q).max().unwrap_or(0);
    while lo <= max_q {
        let hi = lo * 2;
        let m = terms
            .iter()
            .filter(|t| t.q >= lo && t.q < hi)
            .map(|t| t.term.abs())
            .fold(0f64, f64::max);
        if m > 1e-300 {
            blocks.push((((lo + hi - 1) as f64 / 2.0).ln(), m.ln()));
        }
        lo = hi;
    }
    if blocks.len() < 2 {
        return None;
    }
    let k = blocks.len() as f64;
    let mx = blocks.iter().map(|b| b.0).sum::<f64>() / k;
    let my = blocks.iter().map(|b| b.1).sum::<f64>() / k;
    let sxy: f64 = blocks.iter().map(|b| (b.0 - mx) * (b.1 - my)).sum();
    let sxx: f64 = blocks.iter().map(|b| (b.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// `gcd(gcd(a_1, .., a_R), q) = 1`.
pub fn is_primitive(a: &[u64], q: u64) -> bool {
    a.iter().fold(q, |g, &x| gcd(g, x)) == 1
}

pub fn count_unit_solutions(sys: &PolySystem, q: u64, budget: &Budget) -> Result<UnitCount> {
    Local::new(sys, *budget).count(q)
}

pub fn local_density(
    sys: &PolySystem,
    p: u64,
    k_max: u32,
    budget: &Budget,
) -> Result<LocalDensity> {
    Local::new(sys, *budget).density(p, k_max)
}

pub fn gauss_sum(sys: &PolySystem, q: u64, a: &[u64], budget: &Budget) -> Result<GaussSumValue> {
    Local::new(sys, *budget).gauss_sum(q, a)
}

pub fn b_of_q(sys: &PolySystem, q: u64, budget: &Budget) -> Result<BValue> {
    Local::new(sys, *budget).b_of_q(q)
}

pub fn singular_series(
    sys: &PolySystem,
    h: u64,
    method: SeriesMethod,
    budget: &Budget,
) -> Result<SeriesTruncation> {
    Local::new(sys, *budget).singular_series(h, method)
}

pub fn euler_product(
    sys: &PolySystem,
    p_max: u64,
    k_max: u32,
    budget: &Budget,
) -> Result<EulerProduct> {
    Local::new(sys, *budget).euler_product(p_max, k_max)
}

pub fn hensel_check(
    sys: &PolySystem,
    p: u64,
    k_budget: u32,
    budget: &Budget,
) -> Result<HenselWitness> {
    Local::new(sys, *budget).hensel_check(p, k_budget, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_system;

    fn sys(text: &str) -> PolySystem {
        parse_system(text).unwrap()
    }

    fn rat(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    fn brute_count(s: &PolySystem, q: u64) -> u128 {
        let c = s.compile();
        let ms = c.reduce_mod(q);
        let units = units_mod(q);
        let n = c.n;
        let mut x = vec![0u64; n];
        let mut count = 0;
        for i in 0..units.len().pow(n as u32) {
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

    fn brute_gauss(s: &PolySystem, q: u64, a: &[u64]) -> (f64, f64) {
        let c = s.compile();
        let ms = c.reduce_mod(q);
        let units = units_mod(q);
        let n = c.n;
        let mut x = vec![0u64; n];
        let (mut re, mut im) = (0f64, 0f64);
        for i in 0..units.len().pow(n as u32) {
            let mut t = i;
            for v in x.iter_mut() {
                *v = units[t % units.len()];
                t /= units.len();
            }
            let ph = ms
                .eval(&x)
                .iter()
                .zip(a)
                .fold(0u64, |s, (&v, &aa)| (s + v * aa) % q);
            let th = std::f64::consts::TAU * ph as f64 / q as f64;
            re += th.cos();
            im += th.sin();
        }
        (re, im)
    }

    #[test]
    fn unit_counts_for_sum_of_two_squares() {
        let s = sys("vars 2\nx1^2 + x2^2");
        let l = Local::new(&s, Budget::default());
        assert_eq!(l.count(5).unwrap().value, 8);
        assert_eq!(l.count(1).unwrap().value, 1);
        assert_eq!(l.count(25).unwrap().value, 40);
        assert_eq!(brute_count(&s, 5), 8);
        assert_eq!(brute_count(&s, 25), 40);
        assert!(l.count(0).is_err());
    }

    #[test]
    fn crt_and_direct_agree_with_brute_force() {
        for text in [
            "vars 3\nx1^2 + x2^2 - x3^2",
            "vars 3\nx1*x2 + x3^2",
            "vars 3\nx1^2 + x2^2 - 2*x3^2\nx1^3 + x2^3 - x3^3",
        ] {
            let s = sys(text);
            let l = Local::new(&s, Budget::default());
            for q in [1, 2, 3, 4, 6, 8, 9, 10, 12, 15, 18, 20] {
                let b = brute_count(&s, q);
                assert_eq!(l.count(q).unwrap().value, b, "{text} q={q}");
                assert_eq!(l.count_direct(q).unwrap(), b, "{text} q={q}");
            }
        }
    }

    #[test]
    fn density_of_sum_of_two_squares_at_five() {
        let s = sys("vars 2\nx1^2 + x2^2");
        let d = local_density(&s, 5, 3, &Budget::default()).unwrap();
        assert_eq!(d.values[0], rat(5, 2));
        assert_eq!(d.values[1], rat(5, 2));
        assert_eq!(d.stabilization_k, Some(1));
        assert!(d.stabilized);
        assert_eq!(d.filled_from, Some(3));
    }

    #[test]
    fn obstructed_density_is_zero() {
        let s = sys("vars 3\nx1^2 + x2^2 + x3^2");
        let l = Local::new(&s, Budget::default());
        for k in 1..=3 {
            assert!(l.density_at(2, k).unwrap().is_zero());
            assert_eq!(brute_count(&s, 2u64.pow(k)), 0);
        }
        let d = l.density(2, 3).unwrap();
        assert!(d.values.iter().all(Zero::is_zero));
    }

    #[test]
    fn quadric_at_two_stabilizes_at_level_three() {
        // Every unit has gradient divisible by exactly 2, so the lifting
        // criterion needs 2 * 1 < k.
        let s = sys("vars 4\nx1^2 + x2^2 - x3^2 - x4^2");
        let l = Local::new(&s, Budget::default());
        let d = l.density(2, 5).unwrap();
        assert_eq!(d.stabilization_k, Some(3));
        for k in 1..=4u32 {
            let q = 2u64.pow(k);
            let expect = BigRational::new(
                BigInt::from(q) * BigInt::from(brute_count(&s, q)),
                BigInt::from(totient(q)).pow(4),
            );
            assert_eq!(d.values[k as usize - 1], expect);
        }
        assert_eq!(d.values[2], d.values[3]);
    }

    #[test]
    fn gauss_sum_examples() {
        let s = sys("vars 2\nx1^2 + x2^2");
        let l = Local::new(&s, Budget::default());
        let c1 = l.gauss_sum(1, &[0]).unwrap();
        assert!((c1.re - 1.0).abs() < 1e-15 && c1.im.abs() < 1e-15);
        let c2 = l.gauss_sum(2, &[1]).unwrap();
        assert!((c2.re - 1.0).abs() < 1e-15);
        let c5 = l.gauss_sum(5, &[1]).unwrap();
        let expect = 6.0 - 2.0 * 5f64.sqrt();
        assert!((c5.re - expect).abs() < 1e-14);
        let (bre, bim) = brute_gauss(&s, 5, &[1]);
        assert!((c5.re - bre).abs() < 1e-12 && (c5.im - bim).abs() < 1e-12);
    }

    #[test]
    fn gauss_sums_match_brute_force_and_conjugate() {
        let s = sys("vars 3\nx1^2 + x2^2 - 2*x3^2\nx1^3 + x2^3 - x3^3");
        let l = Local::new(&s, Budget::default());
        for q in [3, 4, 7, 12] {
            for a in [[1u64, 0], [1, 1], [2, 5]] {
                let g = l.gauss_sum(q, &a).unwrap();
                let (re, im) = brute_gauss(&s, q, &[a[0] % q, a[1] % q]);
                assert!((g.re - re).abs() < 1e-9 && (g.im - im).abs() < 1e-9);
                let neg: Vec<u64> = a.iter().map(|&x| (q - x % q) % q).collect();
                let h = l.gauss_sum(q, &neg).unwrap();
                assert!((g.re - h.re).abs() < 1e-12 && (g.im + h.im).abs() < 1e-12);
                assert!(g.value.norm() <= (totient(q) as f64).powi(3) + 1e-9);
            }
        }
    }

    #[test]
    fn b_of_five_and_layer_identity() {
        let s = sys("vars 2\nx1^2 + x2^2");
        let l = Local::new(&s, Budget::default());
        let b = l.b_of_q(5).unwrap();
        assert!((b.re - 24.0).abs() < 1e-9 && b.im.abs() < 1e-9);
        // Oracle: four brute-force Gauss sums.
        let oracle: f64 = (1..5).map(|a| brute_gauss(&s, 5, &[a]).0).sum();
        assert!((oracle - 24.0).abs() < 1e-9);
        assert_eq!(l.b_normalized_exact(5).unwrap(), rat(24, 16));
        assert!((1.0 + b.term() - 2.5).abs() < 1e-12);
        assert!((l.b_of_q(1).unwrap().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exact_and_gauss_series_agree() {
        let s = sys("vars 3\nx1^2 + x2^2 - x3^2");
        let l = Local::new(&s, Budget::default());
        let g = l.singular_series(30, SeriesMethod::Gauss).unwrap();
        let e = l.singular_series(30, SeriesMethod::Exact).unwrap();
        assert_eq!(g.terms[0].term, 1.0);
        for (x, y) in g.terms.iter().zip(&e.terms) {
            assert!((x.term - y.term).abs() < 1e-10, "q={}", x.q);
        }
        assert!((g.partial.value - e.partial.value).abs() < 1e-9);
        assert!(e.partial.exact.is_some());
        let one = l.singular_series(1, SeriesMethod::Gauss).unwrap();
        assert_eq!(one.partial.value, 1.0);
        assert!(g.to_csv().starts_with("q,Bq_re,Bq_im,term\n1,"));
    }

    #[test]
    fn series_for_two_squares_up_to_five() {
        let s = sys("vars 2\nx1^2 + x2^2");
        let l = Local::new(&s, Budget::default());
        let got = l.singular_series(5, SeriesMethod::Gauss).unwrap();
        let oracle: f64 = 1.0
            + (2..=5u64)
                .map(|q| {
                    let b: f64 = (1..q)
                        .filter(|&a| gcd(a, q) == 1)
                        .map(|a| brute_gauss(&s, q, &[a]).0)
                        .sum();
                    b / (totient(q) as f64).powi(2)
                })
                .sum::<f64>();
        assert!((got.partial.value - oracle).abs() < 1e-12);
    }

    #[test]
    fn euler_product_small_primes() {
        let s = sys("vars 2\nx1^2 + x2^2");
        let l = Local::new(&s, Budget::default());
        let e = l.euler_product(5, 4).unwrap();
        assert_eq!(e.factors.len(), 3);
        assert_eq!(e.factors[2].value.exact.as_deref(), Some("5/2"));
        // No unit zeros mod 4 (1 + 1 = 2) nor mod 3 (1 + 1 = 2).
        assert_eq!(e.obstructions, vec![2, 3]);
        assert!(e.exact.is_zero());
    }

    #[test]
    fn hensel_examples() {
        let budget = Budget::default();
        let three = sys("vars 3\nx1^2 + x2^2 + x3^2");
        let w = hensel_check(&three, 2, 4, &budget).unwrap();
        assert_eq!(w.obstruction_level(), Some(3));
        // 1 + 1 + 1 = 0 mod 3 with gradient (2, 2, 2): a nonsingular zero.
        let w3 = hensel_check(&three, 3, 4, &budget).unwrap();
        assert_eq!(w3.outcome, HenselOutcome::Witness);

        let two = sys("vars 2\nx1^2 + x2^2");
        let w = hensel_check(&two, 5, 3, &budget).unwrap();
        assert_eq!(w.outcome, HenselOutcome::Witness);
        let h = w.h.unwrap();
        assert_eq!((h[0] * h[0] + h[1] * h[1]) % 5, 0);
        let w = hensel_check(&two, 3, 3, &budget).unwrap();
        assert_eq!(w.obstruction_level(), Some(1));
    }

    #[test]
    fn quadric_at_two_has_lifted_witness() {
        let s = sys("vars 4\nx1^2 + x2^2 - x3^2 - x4^2");
        let w = hensel_check(&s, 2, 4, &Budget::default()).unwrap();
        assert_eq!(w.outcome, HenselOutcome::LiftedWitness { delta: 1 });
        assert_eq!(w.k, 3);
    }

    #[test]
    fn decay_fit_recovers_power_law() {
        let terms: Vec<SeriesTerm> = (1..=256u64)
            .map(|q| SeriesTerm {
                q,
                b_re: 0.0,
                b_im: 0.0,
                term: (q as f64).powf(-1.5),
                method: SeriesMethod::Exact,
            })
            .collect();
        let s = fit_decay_exponent(&terms).unwrap();
        assert!((s + 1.5).abs() < 0.1, "{s}");
    }
}

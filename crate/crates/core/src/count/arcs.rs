//! Major/minor arc classification and the decay probes.

use super::enumerate::supports;
use super::expsum::ExpSum;
use super::sieve::sieve_lambda;
use crate::arch::BoxRegion;
use crate::error::{Error, Result};
use crate::local::{engine::Budget, is_primitive, Local};
use crate::numeric::{gcd, jordan_totient, rng, units_mod, Dd};
use crate::poly::{decompose, top_block_rank, PolySystem, VarPartition};
use rand::Rng;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "class", rename_all = "lowercase")]
pub enum ArcClass {
    Major { q: u64, a: Vec<u64> },
    Minor,
}

/// One inequality `|alpha_i - a_i/q| <= Q/(q P^{d_i})`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArcCheck {
    pub distance: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArcLabel {
    #[serde(flatten)]
    pub class: ArcClass,
    /// The certifying inequalities of the witness (empty when minor).
    pub checks: Vec<ArcCheck>,
    /// Number of `(q, a)` that certify; at most one when `Q < P^{1/4}`.
    pub witnesses: usize,
}

impl ArcLabel {
    pub fn is_major(&self) -> bool {
        matches!(self.class, ArcClass::Major { .. })
    }
}

/// `Q = P^varpi` with `varpi = 1/(4(R+1))`.
pub fn arc_parameter(p: f64, r: usize) -> f64 {
    p.powf(1.0 / (4.0 * (r as f64 + 1.0)))
}

/// Scans `q = 1..=floor(Q)` with `a_i = round(q alpha_i)`.
pub fn classify_arc(alpha: &[f64], degrees: &[u32], p: f64, q_cap: f64) -> Result<ArcLabel> {
    if alpha.len() != degrees.len() || alpha.is_empty() {
        return Err(Error::invalid("alpha needs one entry per form"));
    }
    if alpha.iter().any(|a| !a.is_finite()) || !(q_cap >= 1.0) || !(p > 1.0) {
        return Err(Error::invalid("need finite alpha, Q >= 1 and P > 1"));
    }
    let mut found: Option<(u64, Vec<u64>, Vec<ArcCheck>)> = None;
    let mut witnesses = 0;
    for q in 1..=q_cap.floor() as u64 {
        let qf = q as f64;
        let a: Vec<u64> = alpha
            .iter()
            .map(|&x| (qf * x).round().max(0.0) as u64)
            .collect();
        if a.iter().fold(q, |g, &ai| gcd(g, ai)) != 1 {
            continue;
        }
        let checks: Vec<ArcCheck> = alpha
            .iter()
            .zip(&a)
            .zip(degrees)
            .map(|((&x, &ai), &d)| ArcCheck {
                distance: (x - ai as f64 / qf).abs(),
                bound: q_cap / (qf * p.powi(d as i32)),
            })
            .collect();
        if checks.iter().all(|c| c.distance <= c.bound) {
            witnesses += 1;
            if found.is_none() {
                found = Some((q, a, checks));
            }
        }
    }
    Ok(match found {
        Some((q, a, checks)) => ArcLabel {
            class: ArcClass::Major { q, a },
            checks,
            witnesses,
        },
        None => ArcLabel {
            class: ArcClass::Minor,
            checks: Vec::new(),
            witnesses,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MajorArcMeasure {
    /// Summed lengths: `prod (2Q/P^d) * sum_{q <= Q} J_R(q) / q^R`.
    pub measure: f64,
    /// `Q^{R+1} prod (2Q/P^d)`.
    pub bound: f64,
}

pub fn major_arc_measure(degrees: &[u32], p: f64, q_cap: f64) -> MajorArcMeasure {
    let r = degrees.len() as u32;
    let boxes: f64 = degrees
        .iter()
        .map(|&d| 2.0 * q_cap / p.powi(d as i32))
        .product();
    let sum: f64 = (1..=q_cap.floor() as u64)
        .map(|q| jordan_totient(q, r) as f64 / (q as f64).powi(r as i32))
        .sum();
    MajorArcMeasure {
        measure: boxes * sum,
        bound: q_cap.powi(r as i32 + 1) * boxes,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeRow {
    pub p: u64,
    pub q: f64,
    pub max_norm: f64,
    pub q90_norm: f64,
    /// Least-squares slope of `log max_norm` against `log P` over all rows.
    pub fitted_exponent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinorArcReport {
    pub rows: Vec<ProbeRow>,
    /// `-varpi / (2^D R)`, the exponent of `P` in the minor-arc bound.
    pub predicted_exponent: f64,
    pub samples: usize,
    pub rejected: usize,
}

impl MinorArcReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("P,Q,max_norm,q90,fit\n");
        for r in &self.rows {
            let fit = r.fitted_exponent.map(|f| f.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.p, r.q, r.max_norm, r.q90_norm, fit
            ));
        }
        out
    }
}

fn slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Samples `alpha` uniformly on the minor arcs at each `P` and records the
/// largest and 90th-percentile normalized magnitudes.
pub fn minor_arc_probe(
    sys: &PolySystem,
    region: &BoxRegion,
    ps: &[u64],
    n_samples: usize,
    seed: u64,
    max_cost: u128,
) -> Result<MinorArcReport> {
    let r = sys.r();
    let rank = top_block_rank(&decompose(sys, &VarPartition::identity(sys.n())));
    if rank != r {
        return Err(Error::invalid(format!(
            "top block rank {rank} < R = {r}; the minor-arc bound does not apply"
        )));
    }
    if n_samples == 0 || ps.is_empty() {
        return Err(Error::invalid("need at least one P and one sample"));
    }
    let compiled = sys.compile();
    let degrees = sys.degrees();
    let d_max = sys.max_degree();
    let varpi = 1.0 / (4.0 * (r as f64 + 1.0));
    let mut rows = Vec::new();
    let mut rejected = 0;
    for (pi, &p) in ps.iter().enumerate() {
        let table = sieve_lambda(p)?;
        let es = ExpSum::new(&compiled, p, supports(&table, region, p));
        let cost = es.cost().saturating_mul(n_samples as u128);
        if cost > max_cost {
            return Err(Error::budget(
                format!("minor-arc probe at P={p}"),
                cost,
                max_cost,
            ));
        }
        let q_cap = arc_parameter(p as f64, r);
        let mut rng = rng::stream(seed, pi as u64);
        let mut norms = Vec::with_capacity(n_samples);
        let mut attempts = 0usize;
        while norms.len() < n_samples {
            attempts += 1;
            if attempts > 100 * n_samples {
                return Err(Error::Invariant("minor arcs too small to sample".into()));
            }
            let alpha: Vec<f64> = (0..r).map(|_| 1.0 - rng.gen::<f64>()).collect();
            if classify_arc(&alpha, &degrees, p as f64, q_cap)?.is_major() {
                rejected += 1;
                continue;
            }
            let a: Vec<Dd> = alpha.iter().map(|&x| Dd::from(x)).collect();
            norms.push(es.eval(&a)?.normalized);
        }
        norms.sort_by(f64::total_cmp);
        let q90 = norms[((norms.len() - 1) as f64 * 0.9).round() as usize];
        rows.push(ProbeRow {
            p,
            q: q_cap,
            max_norm: *norms.last().unwrap(),
            q90_norm: q90,
            fitted_exponent: None,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| (r.p as f64).ln()).collect();
    let ys: Vec<f64> = rows
        .iter()
        .map(|r| r.max_norm.max(f64::MIN_POSITIVE).ln())
        .collect();
    let fit = slope(&xs, &ys);
    for row in &mut rows {
        row.fitted_exponent = fit;
    }
    Ok(MinorArcReport {
        rows,
        predicted_exponent: -varpi / (2f64.powi(d_max as i32) * r as f64),
        samples: n_samples,
        rejected,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussAverageRow {
    pub q: u64,
    /// Sum over primitive `a` of `|C(q, a)|`.
    pub lhs: f64,
    /// `lhs / q^{n - 3/2}`.
    pub ratio: f64,
}

pub fn gauss_average_csv(rows: &[GaussAverageRow]) -> String {
    let mut out = String::from("q,lhs,ratio\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.q, r.lhs, r.ratio));
    }
    out
}

/// `sum over primitive a of |C(q, a)|` against `q^{n - 3/2}` for `q <= q_max`.
pub fn gauss_average_probe(
    sys: &PolySystem,
    q_max: u64,
    budget: &Budget,
) -> Result<Vec<GaussAverageRow>> {
    if q_max == 0 {
        return Err(Error::invalid("q_max must be at least 1"));
    }
    let local = Local::new(sys, *budget);
    let r = sys.r();
    let n = sys.n();
    let cost: u128 = (1..=q_max)
        .map(|q| jordan_totient(q, r as u32) * units_mod(q).len() as u128)
        .sum();
    if cost > budget.max_gauss {
        return Err(Error::budget("Gauss average probe", cost, budget.max_gauss));
    }
    let mut rows = Vec::new();
    for q in 1..=q_max {
        let mut lhs = 0.0;
        let total = (q as u128).pow(r as u32);
        let mut a = vec![0u64; r];
        for i in 0..total {
            let mut t = i;
            for v in a.iter_mut() {
                *v = (t % q as u128) as u64;
                t /= q as u128;
            }
            if !is_primitive(&a, q) {
                continue;
            }
            let c = local.gauss_sum(q, &a)?;
            lhs += c.re.hypot(c.im);
        }
        rows.push(GaussAverageRow {
            q,
            lhs,
            ratio: lhs / (q as f64).powf(n as f64 - 1.5),
        });
    }
    Ok(rows)
}

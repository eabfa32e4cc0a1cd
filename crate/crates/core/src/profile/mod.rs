//! Degree profile, power-saving exponents, admissibility and the variable-count
//! thresholds. All arithmetic is exact over the rationals.

mod birch;
mod threshold;

pub use birch::{
    estimate_birch_dim, sample_nonsingularity, BirchEstimate, BirchMethod, SingularitySample,
};
pub use threshold::{threshold_report, KappaCheck, ThresholdJson, ThresholdReport};

use crate::error::{Error, Result};
use crate::poly::PolySystem;
use crate::report::Quantity;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use std::collections::BTreeMap;

pub(crate) fn rat(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

pub(crate) fn pow2(e: u32) -> BigRational {
    BigRational::from_integer(BigInt::one() << e as usize)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeProfile {
    /// `r_d` for each `d` in `Delta`.
    pub r: BTreeMap<u32, usize>,
    /// `D_j = sum_{d <= j} d r_d` for `j = 0..=D`.
    pub cal_d_j: Vec<u64>,
}

impl DegreeProfile {
    pub fn from_counts(r: BTreeMap<u32, usize>) -> Result<Self> {
        let r: BTreeMap<u32, usize> = r.into_iter().filter(|&(_, c)| c > 0).collect();
        if r.is_empty() {
            return Err(Error::EmptySystem);
        }
        if r.keys().any(|&d| d == 0) {
            return Err(Error::invalid("degrees must be positive"));
        }
        let big_d = *r.keys().next_back().unwrap();
        let mut cal_d_j = vec![0u64; big_d as usize + 1];
        for j in 1..=big_d {
            cal_d_j[j as usize] =
                cal_d_j[j as usize - 1] + j as u64 * *r.get(&j).unwrap_or(&0) as u64;
        }
        Ok(DegreeProfile { r, cal_d_j })
    }

    pub fn delta(&self) -> Vec<u32> {
        self.r.keys().copied().collect()
    }

    pub fn r_d(&self, d: u32) -> usize {
        *self.r.get(&d).unwrap_or(&0)
    }

    /// Total number of forms `R`.
    pub fn big_r(&self) -> usize {
        self.r.values().sum()
    }

    /// Minimal degree `C`.
    pub fn c(&self) -> u32 {
        *self.r.keys().next().unwrap()
    }

    /// Maximal degree `D`.
    pub fn d(&self) -> u32 {
        *self.r.keys().next_back().unwrap()
    }

    /// Weighted degree sum.
    pub fn cal_d(&self) -> u64 {
        *self.cal_d_j.last().unwrap()
    }

    pub fn cal_d_at(&self, j: u32) -> u64 {
        self.cal_d_j[(j as usize).min(self.cal_d_j.len() - 1)]
    }
}

pub fn degree_profile(sys: &PolySystem) -> DegreeProfile {
    let r = sys
        .forms_by_degree()
        .iter()
        .map(|(&d, fs)| (d, fs.len()))
        .collect();
    DegreeProfile::from_counts(r).expect("a valid system has at least one form")
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSavingProfile {
    pub n: usize,
    /// `s_d` for `d = 1..=D` (index `d - 1`).
    pub s: Vec<BigRational>,
    /// `u_d` for `d = 1..=D` (index `d - 1`).
    pub u: Vec<BigInt>,
    pub t: BTreeMap<u32, BigRational>,
    pub t0: BigRational,
    pub a1: BigRational,
    pub a2: BigRational,
    /// The `dim V*` value used for `A_1`, `A_2`.
    pub dim_v_star: usize,
    pub admissible: bool,
    /// Failing `d` values of the admissibility inequality (`0` included).
    pub failing: Vec<u32>,
}

impl PowerSavingProfile {
    /// `s_d`, with `s_d = 0` for `d > D`.
    pub fn s_at(&self, d: u32) -> BigRational {
        if d == 0 {
            return self.s[0].clone();
        }
        self.s
            .get(d as usize - 1)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }
}

fn birch_at(birch: &BTreeMap<u32, usize>, d: u32) -> usize {
    *birch.get(&d).unwrap_or(&0)
}

/// Computes `s_d, u_d, t_d, t_0, A_1, A_2` and admissibility.
/// `dim_v_star` defaults to `max_d B_d`.
pub fn power_saving_profile(
    n: usize,
    profile: &DegreeProfile,
    birch: &BTreeMap<u32, usize>,
    dim_v_star: Option<usize>,
) -> Result<PowerSavingProfile> {
    for d in profile.delta() {
        if birch_at(birch, d) >= n {
            return Err(Error::invalid(format!(
                "B_{d} = {} is not below n = {n}",
                birch_at(birch, d)
            )));
        }
    }
    let big_d = profile.d();
    let big_r = profile.big_r() as i64;
    let weight = |i: u32| -> BigInt {
        (BigInt::one() << (i - 1) as usize) * BigInt::from((i - 1) as u64 * profile.r_d(i) as u64)
    };
    let mut s = vec![BigRational::zero(); big_d as usize];
    let mut u = vec![BigInt::zero(); big_d as usize];
    let mut acc_s = BigRational::zero();
    let mut acc_u = BigInt::zero();
    for d in (1..=big_d).rev() {
        if profile.r_d(d) > 0 {
            let w = weight(d);
            acc_s += BigRational::new(w.clone(), BigInt::from(n - birch_at(birch, d)));
            acc_u += w;
        }
        s[d as usize - 1] = acc_s.clone();
        u[d as usize - 1] = acc_u.clone();
    }
    let s_at = |d: u32| -> BigRational {
        if d > big_d {
            BigRational::zero()
        } else {
            s[d as usize - 1].clone()
        }
    };
    let tail = |d: u32| -> BigRational {
        (d + 1..=big_d)
            .map(|j| s_at(j) * rat(profile.r_d(j) as i64))
            .fold(BigRational::zero(), |a, b| a + b)
    };
    let mut t = BTreeMap::new();
    let mut failing = Vec::new();
    let t0 = BigRational::one() - s_at(1) - tail(0);
    // d = 0: the first bracket carries D_0 = 0.
    if s_at(1) + tail(0) >= BigRational::one() {
        failing.push(0);
    }
    for d in profile.delta() {
        let denom = BigRational::new(
            BigInt::one() << (d - 1) as usize,
            BigInt::from(n - birch_at(birch, d)),
        ) + s_at(d + 1);
        let cal = rat(profile.cal_d_at(d) as i64);
        let td = (BigRational::one() - s_at(d + 1) - tail(d)) / &denom - &cal;
        let lhs = &cal * &denom + s_at(d + 1) + tail(d);
        if lhs >= BigRational::one() {
            failing.push(d);
        }
        t.insert(d, td);
    }
    let dim_v_star = dim_v_star.unwrap_or_else(|| {
        profile
            .delta()
            .into_iter()
            .map(|d| birch_at(birch, d))
            .max()
            .unwrap_or(0)
    });
    if dim_v_star >= n {
        return Err(Error::invalid("dim V* must be below n"));
    }
    let codim = rat((n - dim_v_star) as i64);
    let c = pow2(big_d - 1) * rat((big_d - 1) as i64 * big_r);
    let a1 = &c / &codim;
    let a2 = (&codim - &c * rat(big_r + 1)) / (pow2(big_d - 1) + &c) - rat(profile.cal_d() as i64)
        + rat(big_d as i64);
    Ok(PowerSavingProfile {
        n,
        s,
        u,
        t,
        t0,
        a1,
        a2,
        dim_v_star,
        admissible: failing.is_empty(),
        failing,
    })
}

/// Evaluates the admissibility inequality for `d = 0` and every `d` in
/// `Delta`, returning whether all hold and the failing degrees.
pub fn admissible(psp: &PowerSavingProfile) -> (bool, Vec<u32>) {
    (psp.admissible, psp.failing.clone())
}

/// Whether every `t_d` and `t_0` is positive.
pub fn all_t_positive(psp: &PowerSavingProfile) -> bool {
    psp.t0.is_positive() && psp.t.values().all(Signed::is_positive)
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileReport {
    pub delta: Vec<u32>,
    pub r_d: BTreeMap<u32, Quantity>,
    pub big_r: Quantity,
    pub c: Quantity,
    pub d: Quantity,
    pub cal_d: Quantity,
    pub cal_d_j: Vec<Quantity>,
}

impl From<&DegreeProfile> for ProfileReport {
    fn from(p: &DegreeProfile) -> Self {
        ProfileReport {
            delta: p.delta(),
            r_d: p
                .r
                .iter()
                .map(|(&d, &c)| (d, Quantity::int(c as u64)))
                .collect(),
            big_r: Quantity::int(p.big_r() as u64),
            c: Quantity::int(p.c()),
            d: Quantity::int(p.d()),
            cal_d: Quantity::int(p.cal_d()),
            cal_d_j: p.cal_d_j.iter().map(|&v| Quantity::int(v)).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PowerSavingReport {
    pub n: Quantity,
    pub s: BTreeMap<u32, Quantity>,
    pub u: BTreeMap<u32, Quantity>,
    pub t: BTreeMap<u32, Quantity>,
    pub t0: Quantity,
    pub a1: Quantity,
    pub a2: Quantity,
    pub dim_v_star: Quantity,
    pub admissible: bool,
    pub failing: Vec<u32>,
}

impl From<&PowerSavingProfile> for PowerSavingReport {
    fn from(p: &PowerSavingProfile) -> Self {
        let idx = |v: &[BigRational]| {
            v.iter()
                .enumerate()
                .map(|(i, x)| (i as u32 + 1, Quantity::rational(x)))
                .collect()
        };
        PowerSavingReport {
            n: Quantity::int(p.n as u64),
            s: idx(&p.s),
            u: p.u
                .iter()
                .enumerate()
                .map(|(i, x)| (i as u32 + 1, Quantity::int(x.clone())))
                .collect(),
            t: p.t
                .iter()
                .map(|(&d, x)| (d, Quantity::rational(x)))
                .collect(),
            t0: Quantity::rational(&p.t0),
            a1: Quantity::rational(&p.a1),
            a2: Quantity::rational(&p.a2),
            dim_v_star: Quantity::int(p.dim_v_star as u64),
            admissible: p.admissible,
            failing: p.failing.clone(),
        }
    }
}

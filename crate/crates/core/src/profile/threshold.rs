//! Variable-count thresholds and the four codimension conditions on the
//! blocks `f` and `g`.

use super::{pow2, rat, DegreeProfile};
use crate::report::Quantity;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KappaCheck {
    pub name: &'static str,
    /// Which block codimension the condition reads.
    pub block: &'static str,
    pub rhs: Quantity,
    /// `codim - 2^{D-1}(D-1)R(R+1)`, when the codimension was supplied.
    pub lhs: Option<Quantity>,
    pub pass: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdReport {
    pub n_min: BigInt,
    pub iota1: BigInt,
    pub iota2: BigInt,
    pub iota3: BigInt,
    /// `D^2 4^{D+2} R^5`, the stated upper bound for `iota_3`.
    pub iota3_bound: BigInt,
    pub varpi: BigRational,
    pub kappa: Vec<(KappaCheck, BigRational)>,
}

impl ThresholdReport {
    pub fn iota3_within_bound(&self) -> bool {
        self.iota3 <= self.iota3_bound
    }
}

fn int(v: u64) -> BigInt {
    BigInt::from(v)
}

pub fn threshold_report(
    profile: &DegreeProfile,
    codim_f: Option<usize>,
    codim_g: Option<usize>,
) -> ThresholdReport {
    let d = profile.d() as u64;
    let r = profile.big_r() as u64;
    let cal = profile.cal_d();
    let p2 = |e: u64| BigInt::one() << e as usize;
    let n_min = int(d * d) * p2(2 * (d + 6)) * int(r.pow(5));
    // c = 2^{D-1}(D-1)
    let c = p2(d - 1) * int(d - 1);
    let tail = int(r) + &c * int(r * (r + 1));
    let iota1 = (int(cal - d + 1) + p2(d + 3) * int(r * r * (r + 1))) * int(r + 1) * &c + &tail;
    let iota2 =
        (int(cal - d) + p2(d + 3) * int(r * r * (r + 1)) + int(8 * r)) * int(r + 1) * &c + &tail;
    let iota3 = int(r) * &iota2 + &iota1 + int(d * r * r * r + 2 * r * r + r);
    let iota3_bound = int(d * d) * p2(2 * (d + 2)) * int(r.pow(5));
    let varpi = BigRational::new(BigInt::one(), int(4 * (r + 1)));

    let offset = BigRational::from_integer(&c * int(r * (r + 1)));
    let dd = profile.d();
    let rr = r as i64;
    let bracket = pow2(dd - 1) + BigRational::from_integer(&c * int(r));
    let cal_minus_d = rat(cal as i64 - d as i64);
    let k1 = (rat(rr + 1) * &varpi + &cal_minus_d) * &bracket + rat(1);
    let k1p = BigRational::from_integer(p2(2 * d + 2) * int((d - 1) * r * r * (r + 1) * (r + 1)))
        + rat(1);
    let extra = BigRational::new(BigInt::one(), p2(d) * int(r));
    let k2 = ((rat(rr + 1) + extra) * &varpi + &cal_minus_d) * &bracket + rat(1);
    let k2p = BigRational::from_integer(
        (int(8 * r + 8) + p2(d + 3) * int(r * (r + 1) * (r + 1))) * &c * int(r),
    ) + rat(1);

    let make = |name, block, rhs: BigRational, codim: Option<usize>| {
        let lhs = codim.map(|v| rat(v as i64) - &offset);
        let check = KappaCheck {
            name,
            block,
            rhs: Quantity::rational(&rhs),
            lhs: lhs.as_ref().map(Quantity::rational),
            pass: lhs.as_ref().map(|l| l >= &rhs),
        };
        (check, rhs)
    };
    let kappa = vec![
        make("kappa1", "f", k1, codim_f),
        make("kappa1'", "f", k1p, codim_f),
        make("kappa2", "g", k2, codim_g),
        make("kappa2'", "g", k2p, codim_g),
    ];
    ThresholdReport {
        n_min,
        iota1,
        iota2,
        iota3,
        iota3_bound,
        varpi,
        kappa,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdJson {
    pub n_min: Quantity,
    pub iota1: Quantity,
    pub iota2: Quantity,
    pub iota3: Quantity,
    pub iota3_bound: Quantity,
    pub iota3_within_bound: bool,
    pub varpi: Quantity,
    pub kappa: Vec<KappaCheck>,
}

impl From<&ThresholdReport> for ThresholdJson {
    fn from(t: &ThresholdReport) -> Self {
        ThresholdJson {
            n_min: Quantity::int(t.n_min.clone()),
            iota1: Quantity::int(t.iota1.clone()),
            iota2: Quantity::int(t.iota2.clone()),
            iota3: Quantity::int(t.iota3.clone()),
            iota3_bound: Quantity::int(t.iota3_bound.clone()),
            iota3_within_bound: t.iota3_within_bound(),
            varpi: Quantity::rational(&t.varpi),
            kappa: t.kappa.iter().map(|(k, _)| k.clone()).collect(),
        }
    }
}

//! Provenance-tagged numbers for JSON reports.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

pub const SCHEMA: u32 = 1;

/// How a reported number was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Exact,
    Quadrature,
    MonteCarlo,
    Truncation,
}

/// A reported number: decimal value, optional exact form, provenance and
/// optional error bar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub exact: Option<String>,
    pub provenance: Provenance,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<f64>,
}

impl Quantity {
    pub fn int(v: impl Into<BigInt>) -> Self {
        let v: BigInt = v.into();
        Quantity {
            value: v.to_f64().unwrap_or(f64::NAN),
            exact: Some(v.to_string()),
            provenance: Provenance::Exact,
            error: None,
        }
    }

    pub fn rational(v: &BigRational) -> Self {
        Quantity {
            value: ratio_to_f64(v),
            exact: Some(v.to_string()),
            provenance: Provenance::Exact,
            error: None,
        }
    }

    /// A float obtained exactly up to rounding (e.g. `log p`).
    pub fn float_exact(v: f64) -> Self {
        Quantity {
            value: v,
            exact: None,
            provenance: Provenance::Exact,
            error: None,
        }
    }

    pub fn estimate(v: f64, provenance: Provenance, error: Option<f64>) -> Self {
        Quantity {
            value: v,
            exact: None,
            provenance,
            error,
        }
    }
}

/// Accurate conversion for rationals whose parts overflow `f64`.
pub fn ratio_to_f64(v: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (v.numer().to_f64(), v.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    let nb = v.numer().bits() as i64;
    let db = v.denom().bits() as i64;
    let shift = nb - db - 60;
    let (n, d) = if shift > 0 {
        (v.numer().clone(), v.denom().clone() << shift as usize)
    } else {
        (v.numer().clone() << (-shift) as usize, v.denom().clone())
    };
    let q = (n / d).to_f64().unwrap_or(f64::NAN);
    q * 2f64.powi(shift as i32)
}

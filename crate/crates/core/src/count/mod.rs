//! The global side: the von Mangoldt sieve, exact weighted counts of prime
//! solutions, exponential sums and the arc geometry.

pub mod arcs;
pub mod enumerate;
pub mod expsum;
pub mod sieve;

pub use arcs::{
    arc_parameter, classify_arc, gauss_average_csv, gauss_average_probe, major_arc_measure,
    minor_arc_probe, ArcCheck, ArcClass, ArcLabel, GaussAverageRow, MajorArcMeasure,
    MinorArcReport, ProbeRow,
};
pub use enumerate::{count_prime_solutions, CountResult, Strategy, DEFAULT_MAX_COST};
pub use expsum::{ExpSum, ExpSumSample};
pub use sieve::{sieve_lambda, LambdaTable};

use crate::arch::BoxRegion;
use crate::error::{Error, Result};
use crate::numeric::Dd;
use crate::poly::PolySystem;

/// `S_F(alpha)` over `P` times the box, refusing work beyond `max_cost`.
pub fn exp_sum(
    sys: &PolySystem,
    region: &BoxRegion,
    p: u64,
    alpha: &[Dd],
    max_cost: u128,
) -> Result<ExpSumSample> {
    if region.dim() != sys.n() {
        return Err(Error::invalid(
            "box dimension differs from the number of variables",
        ));
    }
    let table = sieve_lambda(p)?;
    let es = ExpSum::new(&sys.compile(), p, enumerate::supports(&table, region, p));
    if es.cost() > max_cost {
        return Err(Error::budget("exponential sum", es.cost(), max_cost));
    }
    es.eval(alpha)
}

//! Estimates of `B_d = dim S_d`, where `S_d` is the locus on which the
//! degree-`d` block of the Jacobian drops rank, from point counts over
//! prime fields.

use crate::error::{Error, Result};
use crate::numeric::{is_prime, reduce, rng};
use crate::poly::{rank::rank_mod_p_inplace, PolySystem};
use rand::Rng;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BirchMethod {
    ExactPointcount {
        p: u64,
        points: u64,
    },
    Sampled {
        p: u64,
        samples: u64,
        hits: u64,
    },
    UserSupplied,
    UpperBoundR,
    /// `r_d = 0`, where `B_d = 0` by definition.
    Convention,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BirchEstimate {
    pub d: u32,
    pub b_d: usize,
    pub method: BirchMethod,
    pub note: String,
}

impl BirchEstimate {
    pub fn user(d: u32, b_d: usize) -> Self {
        BirchEstimate {
            d,
            b_d,
            method: BirchMethod::UserSupplied,
            note: "supplied by the user".into(),
        }
    }

    /// The bound `dim V* <= R` valid for nonsingular systems.
    pub fn upper_bound_r(d: u32, r: usize) -> Self {
        BirchEstimate {
            d,
            b_d: r,
            method: BirchMethod::UpperBoundR,
            note: "upper bound dim V* <= R, valid only for nonsingular systems".into(),
        }
    }
}

fn decode(mut idx: u64, p: u64, out: &mut [u64]) {
    for v in out.iter_mut() {
        *v = idx % p;
        idx /= p;
    }
}

fn block_singular(
    block: &crate::poly::compiled::ModSystem,
    x: &[u64],
    n: usize,
    r_d: usize,
) -> bool {
    let mut j = block.jacobian(x, n);
    rank_mod_p_inplace(&mut j, block.q) < r_d
}

fn dim_from_count(count: f64, p: u64) -> usize {
    if count < 1.0 {
        0
    } else {
        (count.ln() / (p as f64).ln()).round().max(0.0) as usize
    }
}

/// Estimates `B_d` by exhaustive counting over `F_p` for the first listed
/// prime with `p^n <= max_exhaustive`, else by sampling `samples` points
/// over the first prime. Primes `p <= d` are skipped: the derivative of
/// `x^e` vanishes mod `p` when `p | e`, which inflates the singular locus.
pub fn estimate_birch_dim(
    sys: &PolySystem,
    d: u32,
    primes: &[u64],
    max_exhaustive: u64,
    samples: u64,
    seed: u64,
) -> Result<BirchEstimate> {
    if primes.is_empty() {
        return Err(Error::invalid("prime list is empty"));
    }
    if let Some(&p) = primes.iter().find(|&&p| !is_prime(p)) {
        return Err(Error::CompositeModulus(p));
    }
    let Some(block) = sys.block(d) else {
        return Ok(BirchEstimate {
            d,
            b_d: 0,
            method: BirchMethod::Convention,
            note: "no forms of this degree; B_d = 0 by convention".into(),
        });
    };
    let primes: Vec<u64> = primes.iter().copied().filter(|&p| p > d as u64).collect();
    if primes.is_empty() {
        return Err(Error::invalid(format!(
            "no listed prime exceeds the degree {d}"
        )));
    }
    let n = sys.n();
    let r_d = block.r();
    let compiled = block.compile();
    let exhaustive = primes
        .iter()
        .copied()
        .find(|&p| p.checked_pow(n as u32).is_some_and(|t| t <= max_exhaustive));
    if let Some(p) = exhaustive {
        let ms = compiled.reduce_mod(p);
        let total = p.pow(n as u32);
        let points = reduce::chunked(
            total,
            reduce::CHUNK,
            0u64,
            |range| {
                let mut x = vec![0u64; n];
                range
                    .filter(|&i| {
                        decode(i, p, &mut x);
                        block_singular(&ms, &x, n, r_d)
                    })
                    .count() as u64
            },
            |a, b| a + b,
        );
        let b_d = dim_from_count(points as f64, p);
        let note = if points == 0 {
            "no F_p points; dimension reported as 0".to_string()
        } else {
            format!("round(log_{p} {points}); estimate from an affine F_p point count")
        };
        return Ok(BirchEstimate {
            d,
            b_d: b_d.min(n),
            method: BirchMethod::ExactPointcount { p, points },
            note,
        });
    }
    let p = primes[0];
    let ms = compiled.reduce_mod(p);
    let chunk = 4096u64;
    let hits = reduce::chunked(
        samples,
        chunk,
        0u64,
        |range| {
            let mut r = rng::stream(seed, range.start / chunk);
            let mut x = vec![0u64; n];
            range
                .filter(|_| {
                    for v in x.iter_mut() {
                        *v = r.gen_range(0..p);
                    }
                    block_singular(&ms, &x, n, r_d)
                })
                .count() as u64
        },
        |a, b| a + b,
    );
    let est = hits as f64 / samples.max(1) as f64 * (p as f64).powi(n as i32);
    let note = if hits == 0 {
        "no sampled point was singular; dimension reported as 0".to_string()
    } else {
        format!("sampled estimate of #S_d(F_{p}) = {est:.3e}")
    };
    Ok(BirchEstimate {
        d,
        b_d: dim_from_count(est, p).min(n),
        method: BirchMethod::Sampled { p, samples, hits },
        note,
    })
}

/// Result of sampling zeros mod `p` and testing the Jacobian rank.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularitySample {
    pub p: u64,
    pub draws: u64,
    pub zeros_tested: u64,
    pub singular_zeros: u64,
    /// One singular nonzero zero, if found.
    pub example: Option<Vec<u64>>,
}

/// Draws random nonzero points mod each prime, keeps those on the variety,
/// and checks the full Jacobian has rank `R` mod `p` there. Stops per prime
/// after `samples` zeros or `200 * samples` draws.
pub fn sample_nonsingularity(
    sys: &PolySystem,
    primes: &[u64],
    samples: u64,
    seed: u64,
) -> Result<Vec<SingularitySample>> {
    let n = sys.n();
    let r = sys.r();
    let compiled = sys.compile();
    let mut out = Vec::new();
    for (k, &p) in primes.iter().enumerate() {
        if !is_prime(p) {
            return Err(Error::CompositeModulus(p));
        }
        let ms = compiled.reduce_mod(p);
        let mut rng = rng::stream(seed, k as u64);
        let mut s = SingularitySample {
            p,
            draws: 0,
            zeros_tested: 0,
            singular_zeros: 0,
            example: None,
        };
        let mut x = vec![0u64; n];
        while s.zeros_tested < samples && s.draws < samples.saturating_mul(200) {
            s.draws += 1;
            for v in x.iter_mut() {
                *v = rng.gen_range(0..p);
            }
            if x.iter().all(|&v| v == 0) || ms.eval(&x).iter().any(|&v| v != 0) {
                continue;
            }
            s.zeros_tested += 1;
            let mut j = ms.jacobian(&x, n);
            if rank_mod_p_inplace(&mut j, p) < r {
                s.singular_zeros += 1;
                if s.example.is_none() {
                    s.example = Some(x.clone());
                }
            }
        }
        out.push(s);
    }
    Ok(out)
}

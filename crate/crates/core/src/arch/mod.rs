//! The real place: the oscillatory integral `upsilon`, the truncated
//! singular integral, a slab-volume density and real zero search.

pub mod quad;

use crate::error::{Error, Result};
use crate::numeric::{reduce, rng};
use crate::poly::{CompiledSystem, PolySystem};
use crate::report::ratio_to_f64;
use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::sync::OnceLock;

/// Axis-parallel box `b'_j < x_j <= b''_j` inside `(0, 1)^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::invalid(
                "box bounds must be nonempty and of equal length",
            ));
        }
        for (j, (&a, &b)) in lo.iter().zip(&hi).enumerate() {
            if !(0.0 < a && a < b && b < 1.0) {
                return Err(Error::invalid(format!(
                    "box coordinate {} needs 0 < {a} < {b} < 1",
                    j + 1
                )));
            }
        }
        Ok(BoxRegion { lo, hi })
    }

    pub fn cube(n: usize, a: f64, b: f64) -> Result<Self> {
        Self::new(vec![a; n], vec![b; n])
    }

    /// The default box `(0.1, 0.9)^n`.
    pub fn default_for(n: usize) -> Self {
        Self::cube(n, 0.1, 0.9).expect("valid default box")
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn contains_strictly(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(&v, (&a, &b))| a < v && v < b)
    }

    fn restrict(&self, vars: &[usize]) -> BoxRegion {
        BoxRegion {
            lo: vars.iter().map(|&j| self.lo[j]).collect(),
            hi: vars.iter().map(|&j| self.hi[j]).collect(),
        }
    }
}

/// Quadrature settings for `upsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadSpec {
    /// Minimum nodes per axis; the oscillation rule may raise it.
    pub nodes: usize,
    /// Gauss-Legendre order of each panel.
    pub order: usize,
    /// Nodes per cycle of the phase along an axis.
    pub nodes_per_cycle: f64,
    /// Largest tensor grid for one component.
    pub max_points: u64,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec {
            nodes: 16,
            order: 16,
            nodes_per_cycle: 6.0,
            max_points: 4_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpsilonValue {
    pub re: f64,
    pub im: f64,
    /// `|coarse - fine|` between the rule and one with doubled panels.
    pub refinement_delta: f64,
    pub nodes_per_axis: Vec<usize>,
    /// The oscillation rule asked for more nodes than `max_points` allows.
    pub undersampled: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegralMethod {
    TensorQuadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegralEstimate {
    pub h: f64,
    pub value: f64,
    /// Value of the same computation at `H/2`.
    pub value_half: f64,
    pub method: IntegralMethod,
    /// Simpson error estimate plus the node-refinement proxy at `|theta| = H`.
    pub refinement_delta: f64,
    /// `|I(H) - I(H/2)|`, the empirical tail proxy.
    pub tail_delta: f64,
    pub error: f64,
    pub undersampled: bool,
    pub tail_note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityEstimate {
    pub epsilon: f64,
    pub samples: u64,
    pub hits: u64,
    pub value: f64,
    pub std_error: f64,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealWitness {
    pub x: Vec<f64>,
    /// `max |F_i(x)|` from exact rational evaluation at the binary point.
    pub residual: f64,
    pub min_singular_value: f64,
    pub restarts_used: u64,
}

fn base_rule(order: usize) -> (Vec<f64>, Vec<f64>) {
    static RULE16: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    if order == 16 {
        RULE16.get_or_init(|| quad::gauss_legendre(16)).clone()
    } else {
        quad::gauss_legendre(order)
    }
}

fn composite_from(
    base: &(Vec<f64>, Vec<f64>),
    a: f64,
    b: f64,
    panels: usize,
) -> (Vec<f64>, Vec<f64>) {
    let h = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * base.0.len());
    let mut weights = Vec::with_capacity(panels * base.0.len());
    for p in 0..panels {
        let lo = a + h * p as f64;
        for (xi, wi) in base.0.iter().zip(&base.1) {
            nodes.push(lo + 0.5 * h * (xi + 1.0));
            weights.push(0.5 * h * wi);
        }
    }
    (nodes, weights)
}

/// A system split over variable components with its box.
#[derive(Debug, Clone)]
pub struct Arch {
    compiled: CompiledSystem,
    parts: Vec<(Vec<usize>, CompiledSystem, BoxRegion)>,
    /// For each part, an earlier part with the same integral (`false`) or
    /// its conjugate (`true`).
    reuse: Vec<Option<(usize, bool)>>,
    region: BoxRegion,
    degree: u32,
    pub spec: QuadSpec,
}

impl Arch {
    pub fn new(sys: &PolySystem, region: &BoxRegion, spec: QuadSpec) -> Result<Self> {
        if region.dim() != sys.n() {
            return Err(Error::invalid(format!(
                "box has {} coordinates, the system has {} variables",
                region.dim(),
                sys.n()
            )));
        }
        let compiled = sys.compile();
        let parts = compiled
            .components()
            .into_iter()
            .map(|vars| {
                let sub = compiled.restrict(&vars);
                let b = region.restrict(&vars);
                (vars, sub, b)
            })
            .collect::<Vec<_>>();
        let key = |sub: &CompiledSystem, b: &BoxRegion, sign: i32| {
            let rows: Vec<Vec<_>> = sub
                .rows
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|t| ((&t.coeff * sign).to_string(), t.vars.clone()))
                        .collect()
                })
                .collect();
            format!("{rows:?}{:?}{:?}", b.lo, b.hi)
        };
        let keys: Vec<String> = parts.iter().map(|(_, sub, b)| key(sub, b, 1)).collect();
        let reuse = parts
            .iter()
            .enumerate()
            .map(|(i, (_, sub, b))| {
                let neg = key(sub, b, -1);
                (0..i).find_map(|k| {
                    if keys[k] == keys[i] {
                        Some((k, false))
                    } else if keys[k] == neg {
                        Some((k, true))
                    } else {
                        None
                    }
                })
            })
            .collect();
        Ok(Arch {
            compiled,
            parts,
            reuse,
            region: region.clone(),
            degree: sys.max_degree(),
            spec,
        })
    }

    pub fn r(&self) -> usize {
        self.compiled.r()
    }

    /// Bound on the number of phase cycles of `theta . F_c` along axis `j`.
    fn cycles(sub: &CompiledSystem, b: &BoxRegion, theta: &[f64], j: usize) -> f64 {
        let width = b.hi[j] - b.lo[j];
        let slope: f64 = sub
            .rows
            .iter()
            .zip(theta)
            .map(|(row, t)| {
                t.abs()
                    * row
                        .iter()
                        .filter_map(|term| {
                            term.vars.iter().find(|v| v.0 == j).map(|&(_, e)| {
                                let corner: f64 = term
                                    .vars
                                    .iter()
                                    .map(|&(k, ek)| b.hi[k].powi(ek as i32 - (k == j) as i32))
                                    .product();
                                term.coeff.abs().to_f64().unwrap_or(f64::MAX) * e as f64 * corner
                            })
                        })
                        .sum::<f64>()
            })
            .sum();
        slope * width
    }

    fn axis_nodes(&self, sub: &CompiledSystem, b: &BoxRegion, theta: &[f64]) -> (Vec<usize>, bool) {
        let m = b.dim();
        let tnorm = theta.iter().map(|t| t * t).sum::<f64>().sqrt();
        let rule = (4.0 * self.degree as f64 * tnorm.sqrt()).ceil() as usize;
        let order = self.spec.order;
        let mut counts: Vec<usize> = (0..m)
            .map(|j| {
                let osc = (self.spec.nodes_per_cycle * Self::cycles(sub, b, theta, j)).ceil()
                    as usize
                    + order;
                let want = self.spec.nodes.max(rule).max(osc).max(order);
                want.div_ceil(order) * order
            })
            .collect();
        let total: f64 = counts.iter().map(|&c| c as f64).product();
        let limit = self.spec.max_points as f64;
        let mut undersampled = false;
        if total > limit {
            undersampled = true;
            let cap = limit.powf(1.0 / m as f64).floor() as usize;
            for c in counts.iter_mut() {
                *c = ((*c).min(cap) / order).max(1) * order;
            }
        }
        (counts, undersampled)
    }

    fn component_integral(
        sub: &CompiledSystem,
        b: &BoxRegion,
        theta: &[f64],
        counts: &[usize],
        order: usize,
    ) -> [f64; 2] {
        let base = base_rule(order);
        let axes: Vec<(Vec<f64>, Vec<f64>)> = counts
            .iter()
            .enumerate()
            .map(|(j, &c)| composite_from(&base, b.lo[j], b.hi[j], c / order))
            .collect();
        let m = axes.len();
        let total: u64 = counts.iter().map(|&c| c as u64).product();
        reduce::chunked(
            total,
            reduce::CHUNK,
            [0.0, 0.0],
            |range| {
                let mut x = vec![0.0; m];
                let mut acc = [0.0, 0.0];
                for i in range {
                    let mut t = i;
                    let mut w = 1.0;
                    for (j, (nodes, weights)) in axes.iter().enumerate() {
                        let k = (t % nodes.len() as u64) as usize;
                        t /= nodes.len() as u64;
                        x[j] = nodes[k];
                        w *= weights[k];
                    }
                    let phase: f64 = sub.eval_f64(&x).iter().zip(theta).map(|(f, t)| f * t).sum();
                    let (s, c) = (TAU * phase).sin_cos();
                    acc[0] += w * c;
                    acc[1] += w * s;
                }
                acc
            },
            |a, b| [a[0] + b[0], a[1] + b[1]],
        )
    }

    fn upsilon_with(&self, theta: &[f64], refine: bool) -> ([f64; 2], f64, Vec<usize>, bool) {
        let mut fine = [1.0, 0.0];
        let mut coarse = [1.0, 0.0];
        let mut all_counts = vec![0; self.region.dim()];
        let mut flagged = false;
        let mut done: Vec<([f64; 2], [f64; 2])> = Vec::with_capacity(self.parts.len());
        for (i, (vars, sub, b)) in self.parts.iter().enumerate() {
            let (counts, under) = self.axis_nodes(sub, b, theta);
            flagged |= under;
            for (&v, &c) in vars.iter().zip(&counts) {
                all_counts[v] = c;
            }
            let (z, zf) = match self.reuse[i] {
                Some((k, conj)) => {
                    let (z, zf) = done[k];
                    if conj {
                        ([z[0], -z[1]], [zf[0], -zf[1]])
                    } else {
                        (z, zf)
                    }
                }
                None => {
                    let z = Self::component_integral(sub, b, theta, &counts, self.spec.order);
                    let zf = if refine {
                        let doubled: Vec<usize> = counts.iter().map(|&c| 2 * c).collect();
                        Self::component_integral(sub, b, theta, &doubled, self.spec.order)
                    } else {
                        z
                    };
                    (z, zf)
                }
            };
            done.push((z, zf));
            coarse = cmul(coarse, z);
            fine = cmul(fine, zf);
        }
        let delta = (fine[0] - coarse[0]).hypot(fine[1] - coarse[1]);
        (fine, delta, all_counts, flagged)
    }

    /// `upsilon(theta) = integral over the box of e(theta . F(x))`, by
    /// composite Gauss-Legendre factored over variable components.
    pub fn upsilon(&self, theta: &[f64]) -> Result<UpsilonValue> {
        if theta.len() != self.r() {
            return Err(Error::invalid(format!(
                "theta has {} entries, the system has {} forms",
                theta.len(),
                self.r()
            )));
        }
        let (v, delta, nodes_per_axis, undersampled) = self.upsilon_with(theta, true);
        Ok(UpsilonValue {
            re: v[0],
            im: v[1],
            refinement_delta: delta,
            nodes_per_axis,
            undersampled,
        })
    }

    fn upsilon_fast(&self, theta: &[f64]) -> [f64; 2] {
        self.upsilon_with(theta, false).0
    }

    /// `I(H)`, the integral of `upsilon` over `|theta_i| <= H`.
    pub fn singular_integral(
        &self,
        h: f64,
        theta_samples: u64,
        seed: u64,
    ) -> Result<IntegralEstimate> {
        if !(h >= 0.0) || !h.is_finite() {
            return Err(Error::invalid("H must be a finite nonnegative number"));
        }
        let r = self.r();
        let tail_note = "expected |I - I(H)| << H^-1".to_string();
        if h == 0.0 {
            return Ok(IntegralEstimate {
                h,
                value: 0.0,
                value_half: 0.0,
                method: IntegralMethod::TensorQuadrature,
                refinement_delta: 0.0,
                tail_delta: 0.0,
                error: 0.0,
                undersampled: false,
                tail_note,
            });
        }
        if r > 3 {
            return self.singular_integral_mc(h, theta_samples, seed, tail_note);
        }
        let (full, err_full) = self.theta_cube(h);
        let (half, err_half) = self.theta_cube(h / 2.0);
        let probe = vec![h / (r as f64).sqrt(); r];
        let up = self.upsilon(&probe)?;
        let node_proxy = up.refinement_delta * (2.0 * h).powi(r as i32);
        let refinement_delta = err_full + err_half + node_proxy;
        let tail_delta = (full - half).abs();
        Ok(IntegralEstimate {
            h,
            value: full,
            value_half: half,
            method: IntegralMethod::TensorQuadrature,
            refinement_delta,
            tail_delta,
            error: refinement_delta + tail_delta,
            undersampled: up.undersampled,
            tail_note,
        })
    }

    /// Iterated adaptive Simpson over unit panels of `[-H, H]^R`, using
    /// `upsilon(-theta) = conj upsilon(theta)` to fold the first axis.
    fn theta_cube(&self, h: f64) -> (f64, f64) {
        let r = self.r();
        let edges = panel_edges(h);
        let tol = if r == 1 { 1e-9 } else { 1e-6 };
        let panels = edges.len() - 1;
        let (v, e) = reduce::chunked(
            panels as u64,
            1,
            (0.0, 0.0),
            |range| {
                let mut acc = (0.0, 0.0);
                for i in range {
                    let (a, b) = (edges[i as usize], edges[i as usize + 1]);
                    let (v, e) = quad::adaptive_simpson(
                        &|t: f64| self.inner_cube(&[t], h, r, tol),
                        a,
                        b,
                        tol,
                        18,
                    );
                    acc.0 += v[0];
                    acc.1 += e;
                }
                acc
            },
            |a, b| (a.0 + b.0, a.1 + b.1),
        );
        (2.0 * v, 2.0 * e)
    }

    fn inner_cube(&self, theta: &[f64], h: f64, r: usize, tol: f64) -> [f64; 2] {
        if theta.len() == r {
            return self.upsilon_fast(theta);
        }
        let edges = symmetric_edges(h);
        let mut acc = [0.0, 0.0];
        for w in edges.windows(2) {
            let (v, _) = quad::adaptive_simpson(
                &|t: f64| {
                    let mut th = theta.to_vec();
                    th.push(t);
                    self.inner_cube(&th, h, r, tol)
                },
                w[0],
                w[1],
                tol,
                12,
            );
            acc[0] += v[0];
            acc[1] += v[1];
        }
        acc
    }

    fn singular_integral_mc(
        &self,
        h: f64,
        samples: u64,
        seed: u64,
        tail_note: String,
    ) -> Result<IntegralEstimate> {
        let r = self.r();
        let run = |hh: f64, stream: u64| {
            let vol = (2.0 * hh).powi(r as i32);
            let chunk = 256u64;
            let (s, s2) = reduce::chunked(
                samples,
                chunk,
                (0.0, 0.0),
                |range| {
                    let mut g = rng::stream(seed ^ stream, range.start / chunk);
                    let mut acc = (0.0, 0.0);
                    for _ in range {
                        let theta: Vec<f64> = (0..r).map(|_| g.gen_range(-hh..hh)).collect();
                        let v = self.upsilon_fast(&theta)[0];
                        acc.0 += v;
                        acc.1 += v * v;
                    }
                    acc
                },
                |a, b| (a.0 + b.0, a.1 + b.1),
            );
            let n = samples.max(2) as f64;
            let mean = s / n;
            let var = (s2 / n - mean * mean).max(0.0);
            (vol * mean, vol * (var / (n - 1.0)).sqrt())
        };
        let (full, se) = run(h, 0);
        let (half, se_half) = run(h / 2.0, 1);
        let tail_delta = (full - half).abs();
        Ok(IntegralEstimate {
            h,
            value: full,
            value_half: half,
            method: IntegralMethod::MonteCarlo,
            refinement_delta: se + se_half,
            tail_delta,
            error: se + se_half + tail_delta,
            undersampled: false,
            tail_note,
        })
    }

    /// `vol{x in box : max_i |F_i(x)| <= eps/2} / eps^R` by Monte Carlo.
    pub fn real_density(&self, eps: f64, samples: u64, seed: u64) -> Result<DensityEstimate> {
        if !(eps > 0.0) {
            return Err(Error::invalid("epsilon must be positive"));
        }
        if samples < 10_000 {
            return Err(Error::invalid("real_density needs at least 10^4 samples"));
        }
        let n = self.region.dim();
        let r = self.r();
        let chunk = 1u64 << 16;
        let hits = reduce::chunked(
            samples,
            chunk,
            0u64,
            |range| {
                let mut g = rng::stream(seed, range.start / chunk);
                let mut x = vec![0.0; n];
                let mut hits = 0u64;
                for _ in range {
                    for (j, v) in x.iter_mut().enumerate() {
                        *v = g.gen_range(self.region.lo[j]..self.region.hi[j]);
                    }
                    if self
                        .compiled
                        .eval_f64(&x)
                        .iter()
                        .all(|f| f.abs() <= eps / 2.0)
                    {
                        hits += 1;
                    }
                }
                hits
            },
            |a, b| a + b,
        );
        let p = hits as f64 / samples as f64;
        let scale = self.region.volume() / eps.powi(r as i32);
        Ok(DensityEstimate {
            epsilon: eps,
            samples,
            hits,
            value: scale * p,
            std_error: scale * (p * (1.0 - p) / samples as f64).sqrt(),
            warning: (hits == 0).then(|| {
                "no sample hit the slab; reduce epsilon's demands by raising samples or epsilon"
                    .to_string()
            }),
        })
    }

    /// Gauss-Newton with backtracking from uniform random starts.
    pub fn find_real_point(
        &self,
        sys: &PolySystem,
        restarts: u64,
        seed: u64,
    ) -> Option<RealWitness> {
        let n = self.region.dim();
        let r = self.r();
        let scale = self.compiled.coeff_scale();
        for attempt in 0..restarts {
            let mut g = rng::stream(seed, attempt);
            let mut x: Vec<f64> = (0..n)
                .map(|j| g.gen_range(self.region.lo[j]..self.region.hi[j]))
                .collect();
            let norm = |x: &[f64]| self.compiled.eval_f64(x).iter().map(|v| v * v).sum::<f64>();
            for _ in 0..200 {
                let f = self.compiled.eval_f64(&x);
                let res = f.iter().fold(0f64, |m, v| m.max(v.abs()));
                if res <= 1e-14 * scale {
                    break;
                }
                let j = DMatrix::from_fn(r, n, |i, k| self.compiled.jacobian_f64(&x)[i][k]);
                let Ok(pinv) = j.pseudo_inverse(1e-12) else {
                    break;
                };
                let step = pinv * nalgebra::DVector::from_vec(f);
                let base = norm(&x);
                let mut t = 1.0;
                let mut moved = false;
                while t > 1e-6 {
                    let y: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a - t * s).collect();
                    if norm(&y) < base {
                        x = y;
                        moved = true;
                        break;
                    }
                    t /= 2.0;
                }
                if !moved {
                    break;
                }
            }
            if !self.region.contains_strictly(&x) {
                continue;
            }
            let xr: Vec<BigRational> = x
                .iter()
                .map(|&v| BigRational::from_float(v).unwrap_or_else(BigRational::zero))
                .collect();
            let Ok(vals) = sys.evaluate_rational(&xr) else {
                continue;
            };
            let residual = vals
                .iter()
                .map(|v| ratio_to_f64(&v.abs()))
                .fold(0f64, f64::max);
            let jac = self.compiled.jacobian_f64(&x);
            let sigma = DMatrix::from_fn(r, n, |i, k| jac[i][k])
                .singular_values()
                .iter()
                .fold(f64::INFINITY, |m, &s| m.min(s));
            if residual <= 1e-10 * scale && sigma > 1e-8 {
                return Some(RealWitness {
                    x,
                    residual,
                    min_singular_value: sigma,
                    restarts_used: attempt + 1,
                });
            }
        }
        None
    }
}

fn cmul(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0]]
}

/// `0 = e_0 < e_1 < .. = h`: unit panels with `h/2` inserted as an edge.
fn panel_edges(h: f64) -> Vec<f64> {
    let mut edges: Vec<f64> = (0..=h.floor() as u64).map(|k| k as f64).collect();
    if *edges.last().unwrap() < h {
        edges.push(h);
    }
    if !edges.contains(&(h / 2.0)) {
        edges.push(h / 2.0);
        edges.sort_by(f64::total_cmp);
    }
    edges
}

fn symmetric_edges(h: f64) -> Vec<f64> {
    let half = panel_edges(h);
    let mut edges: Vec<f64> = half.iter().rev().map(|v| -v).collect();
    edges.extend(half.into_iter().skip(1));
    edges
}

pub fn upsilon(
    sys: &PolySystem,
    region: &BoxRegion,
    theta: &[f64],
    spec: QuadSpec,
) -> Result<UpsilonValue> {
    Arch::new(sys, region, spec)?.upsilon(theta)
}

pub fn singular_integral(
    sys: &PolySystem,
    region: &BoxRegion,
    h: f64,
    spec: QuadSpec,
) -> Result<IntegralEstimate> {
    Arch::new(sys, region, spec)?.singular_integral(h, 100_000, 0)
}

pub fn real_density(
    sys: &PolySystem,
    region: &BoxRegion,
    eps: f64,
    samples: u64,
    seed: u64,
) -> Result<DensityEstimate> {
    Arch::new(sys, region, QuadSpec::default())?.real_density(eps, samples, seed)
}

pub fn find_real_point(
    sys: &PolySystem,
    region: &BoxRegion,
    restarts: u64,
    seed: u64,
) -> Result<Option<RealWitness>> {
    Ok(Arch::new(sys, region, QuadSpec::default())?.find_real_point(sys, restarts, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_system;

    fn hyperbola() -> (PolySystem, BoxRegion) {
        (
            parse_system("vars 2\nx1^2 - x2^2").unwrap(),
            BoxRegion::default_for(2),
        )
    }

    #[test]
    fn box_validation() {
        assert!(BoxRegion::new(vec![0.0], vec![0.5]).is_err());
        assert!(BoxRegion::new(vec![0.5], vec![0.5]).is_err());
        assert!(BoxRegion::new(vec![0.2], vec![1.0]).is_err());
        assert!((BoxRegion::default_for(2).volume() - 0.64).abs() < 1e-15);
    }

    #[test]
    fn upsilon_at_zero_is_volume() {
        let (s, b) = hyperbola();
        let u = upsilon(&s, &b, &[0.0], QuadSpec::default()).unwrap();
        assert!((u.re - 0.64).abs() < 1e-14 && u.im.abs() < 1e-15);
        let cubic = parse_system("vars 3\nx1^3 + x2*x3^2 - x1*x2*x3").unwrap();
        let b3 = BoxRegion::new(vec![0.1, 0.2, 0.3], vec![0.5, 0.7, 0.9]).unwrap();
        let u = upsilon(&cubic, &b3, &[0.0], QuadSpec::default()).unwrap();
        assert!((u.re - b3.volume()).abs() < 1e-14);
    }

    #[test]
    fn upsilon_conjugate_symmetry() {
        let s = parse_system("vars 3\nx1^2 + x2^2 - 2*x3^2\nx1^3 - x2*x3^2").unwrap();
        let b = BoxRegion::default_for(3);
        let a = upsilon(&s, &b, &[1.7, -2.3], QuadSpec::default()).unwrap();
        let c = upsilon(&s, &b, &[-1.7, 2.3], QuadSpec::default()).unwrap();
        assert_eq!(a.re, c.re);
        assert_eq!(a.im, -c.im);
    }

    #[test]
    fn upsilon_matches_monte_carlo_oracle() {
        let (s, b) = hyperbola();
        let u = upsilon(&s, &b, &[1.0], QuadSpec::default()).unwrap();
        let mut g = rng::stream(11, 0);
        let n = 1_000_000;
        let (mut sr, mut sr2, mut si, mut si2) = (0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let x1: f64 = g.gen_range(0.1..0.9);
            let x2: f64 = g.gen_range(0.1..0.9);
            let (sn, cs) = (TAU * (x1 * x1 - x2 * x2)).sin_cos();
            sr += cs;
            sr2 += cs * cs;
            si += sn;
            si2 += sn * sn;
        }
        let nf = n as f64;
        let (mr, mi) = (sr / nf, si / nf);
        let ser = 0.64 * ((sr2 / nf - mr * mr) / nf).sqrt();
        let sei = 0.64 * ((si2 / nf - mi * mi) / nf).sqrt();
        assert!(
            (u.re - 0.64 * mr).abs() < 3.0 * ser,
            "{} vs {}",
            u.re,
            0.64 * mr
        );
        assert!((u.im - 0.64 * mi).abs() < 3.0 * sei);
    }

    #[test]
    fn upsilon_factorization_matches_closed_form() {
        // Each coordinate of x1^2 - x2^2 contributes a Fresnel-type factor;
        // compare against a dense one-dimensional trapezoid oracle.
        let (s, b) = hyperbola();
        let theta = 37.5;
        let u = upsilon(&s, &b, &[theta], QuadSpec::default()).unwrap();
        let m = 400_000;
        let h = 0.8 / m as f64;
        let (mut re, mut im) = (0.0, 0.0);
        for k in 0..=m {
            let x = 0.1 + h * k as f64;
            let w = if k == 0 || k == m { 0.5 } else { 1.0 } * h;
            let (sn, cs) = (TAU * theta * x * x).sin_cos();
            re += w * cs;
            im += w * sn;
        }
        let mag2 = re * re + im * im;
        assert!((u.re - mag2).abs() < 1e-9 && u.im.abs() < 1e-12);
        assert!(u.refinement_delta < 1e-12);
    }

    #[test]
    fn singular_integral_trivia_and_limit() {
        let (s, b) = hyperbola();
        let a = Arch::new(&s, &b, QuadSpec::default()).unwrap();
        assert_eq!(a.singular_integral(0.0, 0, 0).unwrap().value, 0.0);
        let est = a.singular_integral(100.0, 0, 0).unwrap();
        let target = 9f64.ln() / 2.0;
        assert!((est.value - target).abs() < 0.02, "{est:?}");
        assert!(est.error < 0.05);
    }

    #[test]
    fn slab_density_examples() {
        let (s, b) = hyperbola();
        let a = Arch::new(&s, &b, QuadSpec::default()).unwrap();
        let d = a.real_density(1e-2, 2_000_000, 5).unwrap();
        let target = 9f64.ln() / 2.0;
        assert!((d.value - target).abs() < 4.0 * d.std_error + 0.01, "{d:?}");
        let pos = parse_system("vars 2\nx1^2 + x2^2").unwrap();
        let p = real_density(&pos, &b, 1e-3, 100_000, 1).unwrap();
        assert_eq!(p.value, 0.0);
        assert!(p.warning.is_some());
        assert!(a.real_density(0.0, 100_000, 1).is_err());
        assert!(a.real_density(1e-3, 10, 1).is_err());
        let again = a.real_density(1e-2, 2_000_000, 5).unwrap();
        assert_eq!(d, again);
    }

    #[test]
    fn real_point_search() {
        let (s, b) = hyperbola();
        let w = find_real_point(&s, &b, 10, 3).unwrap().unwrap();
        assert!((w.x[0] - w.x[1]).abs() < 1e-9);
        assert!(w.min_singular_value > 1e-8);
        let pos = parse_system("vars 2\nx1^2 + x2^2").unwrap();
        assert!(find_real_point(&pos, &b, 10, 3).unwrap().is_none());
        let qc =
            parse_system("vars 4\nx1^2 + x2^2 - x3^2 - x4^2\nx1^3 + x2^3 - x3^3 - x4^3").unwrap();
        let b4 = BoxRegion::default_for(4);
        let w = find_real_point(&qc, &b4, 20, 1).unwrap().unwrap();
        assert!(w.residual <= 1e-10 * 1.0);
        assert!(w.min_singular_value > 1e-8);
        // The symmetric point is an exact zero of rank 2.
        let x = [0.3, 0.6, 0.6, 0.3];
        let jac = qc.compile().jacobian_f64(&x);
        let sv = DMatrix::from_fn(2, 4, |i, k| jac[i][k]).singular_values();
        assert!(sv.iter().all(|&v| v > 1e-3));
    }
}

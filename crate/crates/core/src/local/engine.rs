//! Histogram engine for unit residues.
//!
//! Every row of the system splits as a sum of one polynomial per variable
//! component, so the multiset of value vectors over `((Z/q)^*)^n` is the
//! additive convolution of per-component multisets. Counts read the
//! convolution at `0`; complete exponential sums are products of
//! per-component transforms.

use crate::error::{Error, Result};
use crate::numeric::{dd::roots_of_unity, gcd, reduce, units_mod, CDd, Dd};
use crate::poly::{CompiledSystem, ModSystem, PolySystem};
use rustc_hash::FxHashMap;
use std::collections::{BTreeMap, HashMap};

/// Work limits for the local layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    /// Largest number of unit tuples scanned for one component histogram.
    pub max_scan: u128,
    /// Largest number of distinct keys held by a convolution.
    pub max_keys: u128,
    /// Largest number of key pairs visited by one convolution step.
    pub max_conv: u128,
    /// Largest number of `(a, value)` pairs visited by a Gauss-sum batch.
    pub max_gauss: u128,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_scan: 50_000_000,
            max_keys: 20_000_000,
            max_conv: 100_000_000,
            max_gauss: 4_000_000_000,
        }
    }
}

/// Condition imposed on each unit tuple of a component before it is
/// counted. Both filters only look at partial derivatives in the
/// component's own variables, so they factor over components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Filter {
    None,
    /// All partial derivatives vanish modulo `m`.
    GradientDivisible(u64),
    /// `lambda . J` vanishes modulo the prime `p`.
    LambdaGradient {
        p: u64,
        lambda: Vec<u64>,
    },
}

/// Sparse multiset of value vectors, keys encoded in base `q`, sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    pub q: u64,
    pub r: usize,
    pub entries: Vec<(u128, u128)>,
}

impl Histogram {
    pub fn total(&self) -> u128 {
        self.entries.iter().map(|e| e.1).sum()
    }
}

pub(crate) fn encode(v: &[u64], q: u64) -> u128 {
    v.iter()
        .rev()
        .fold(0u128, |acc, &x| acc * q as u128 + x as u128)
}

pub(crate) fn decode(mut key: u128, q: u64, out: &mut [u64]) {
    for o in out.iter_mut() {
        *o = (key % q as u128) as u64;
        key /= q as u128;
    }
}

fn add_keys(a: u128, b: u128, q: u64, r: usize) -> u128 {
    let (mut a, mut b) = (a, b);
    let mut out = 0u128;
    let mut scale = 1u128;
    for _ in 0..r {
        let x = (a % q as u128 + b % q as u128) % q as u128;
        out += x * scale;
        scale *= q as u128;
        a /= q as u128;
        b /= q as u128;
    }
    out
}

fn neg_key(a: u128, q: u64, r: usize) -> u128 {
    let mut a = a;
    let mut out = 0u128;
    let mut scale = 1u128;
    for _ in 0..r {
        let x = (q as u128 - a % q as u128) % q as u128;
        out += x * scale;
        scale *= q as u128;
        a /= q as u128;
    }
    out
}

/// A system split into its variable components.
#[derive(Debug, Clone)]
pub struct Components {
    pub n: usize,
    pub r: usize,
    pub parts: Vec<(Vec<usize>, CompiledSystem)>,
}

impl Components {
    pub fn new(sys: &PolySystem) -> Self {
        let c = sys.compile();
        Self::from_compiled(&c)
    }

    pub fn from_compiled(c: &CompiledSystem) -> Self {
        let parts = c
            .components()
            .into_iter()
            .map(|vars| {
                let sub = c.restrict(&vars);
                (vars, sub)
            })
            .collect();
        Components {
            n: c.n,
            r: c.r(),
            parts,
        }
    }

    /// `sum_c phi(q)^{m_c}`, the scan cost of all histograms mod `q`.
    pub fn scan_cost(&self, q: u64) -> u128 {
        let units = units_mod(q).len() as u128;
        self.parts
            .iter()
            .map(|(v, _)| units.checked_pow(v.len() as u32).unwrap_or(u128::MAX))
            .fold(0u128, |a, b| a.saturating_add(b))
    }

    /// Histogram of component `c` over unit tuples mod `q`.
    pub fn histogram(
        &self,
        c: usize,
        q: u64,
        filter: &Filter,
        budget: &Budget,
    ) -> Result<Histogram> {
        let r = self.r;
        check_key_space(q, r)?;
        let (vars, sub) = &self.parts[c];
        let m = vars.len();
        let units = units_mod(q);
        let nu = units.len() as u128;
        let total = nu
            .checked_pow(m as u32)
            .filter(|&t| t <= budget.max_scan)
            .ok_or_else(|| {
                Error::budget(
                    format!("unit scan of a {m}-variable component mod {q}"),
                    nu.saturating_pow(m as u32),
                    budget.max_scan,
                )
            })?;
        let ms = sub.reduce_mod(q);
        let maxe = ms.max_exponent().max(1) as usize;
        let table: Vec<Vec<u64>> = units
            .iter()
            .map(|&u| {
                let mut row = vec![1 % q; maxe + 1];
                for e in 1..=maxe {
                    row[e] = crate::numeric::mul_mod(row[e - 1], u, q);
                }
                row
            })
            .collect();
        let nu64 = units.len() as u64;
        let merged = reduce::chunked(
            total as u64,
            reduce::CHUNK,
            HashMap::<u128, u128>::new(),
            |range| {
                let mut local: HashMap<u128, u128> = HashMap::new();
                let mut idx = vec![0u64; m];
                let mut vals = vec![0u64; r];
                let mut x = vec![0u64; m];
                for i in range {
                    let mut t = i;
                    for slot in idx.iter_mut() {
                        *slot = t % nu64;
                        t /= nu64;
                    }
                    let pows: Vec<&[u64]> =
                        idx.iter().map(|&k| table[k as usize].as_slice()).collect();
                    if !matches!(filter, Filter::None) {
                        for (xs, &k) in x.iter_mut().zip(&idx) {
                            *xs = units[k as usize];
                        }
                        if !passes(filter, &ms, &x) {
                            continue;
                        }
                    }
                    ms.eval_with_powers(&pows, &mut vals);
                    *local.entry(encode(&vals, q)).or_insert(0) += 1;
                }
                local
            },
            |mut a, b| {
                for (k, v) in b {
                    *a.entry(k).or_insert(0) += v;
                }
                a
            },
        );
        let mut entries: Vec<(u128, u128)> = merged.into_iter().collect();
        entries.sort_unstable();
        Ok(Histogram { q, r, entries })
    }

    pub fn histograms(&self, q: u64, filter: &Filter, budget: &Budget) -> Result<Vec<Histogram>> {
        (0..self.parts.len())
            .map(|c| self.histogram(c, q, filter, budget))
            .collect()
    }
}

fn passes(filter: &Filter, ms: &ModSystem, x: &[u64]) -> bool {
    let n = x.len();
    match filter {
        Filter::None => true,
        Filter::GradientDivisible(m) => {
            let j = ms.jacobian(x, n);
            j.iter().flatten().all(|&v| v % m == 0)
        }
        Filter::LambdaGradient { p, lambda } => {
            let j = ms.jacobian(x, n);
            (0..n).all(|col| {
                let s = j.iter().zip(lambda).fold(0u128, |acc, (row, &l)| {
                    acc + (row[col] % p) as u128 * l as u128
                });
                s % *p as u128 == 0
            })
        }
    }
}

fn check_key_space(q: u64, r: usize) -> Result<()> {
    if (q as u128).checked_pow(r as u32).is_none() {
        return Err(Error::budget(
            format!("value keys mod {q} with {r} forms"),
            u128::MAX,
            u128::MAX,
        ));
    }
    Ok(())
}

pub(crate) fn overflow() -> Error {
    Error::budget("unit count beyond 128 bits", u128::MAX, u128::MAX)
}

/// Key arithmetic for the convolution. Keys are repacked into fixed-width
/// bit fields when they fit, so adding two keys needs no division.
#[derive(Clone, Copy)]
enum KeyOps {
    Packed {
        q: u128,
        r: usize,
        bits: u32,
        mask: u128,
    },
    Radix {
        q: u64,
        r: usize,
    },
}

impl KeyOps {
    fn new(q: u64, r: usize) -> Self {
        let bits = (64 - q.saturating_sub(1).leading_zeros()).max(1);
        if bits as usize * r <= 128 {
            KeyOps::Packed {
                q: q as u128,
                r,
                bits,
                mask: (1u128 << bits) - 1,
            }
        } else {
            KeyOps::Radix { q, r }
        }
    }

    fn pack(&self, key: u128) -> u128 {
        match *self {
            KeyOps::Packed { q, r, bits, .. } => {
                let (mut key, mut out) = (key, 0u128);
                for i in 0..r {
                    out |= (key % q) << (bits as usize * i);
                    key /= q;
                }
                out
            }
            KeyOps::Radix { .. } => key,
        }
    }

    #[inline]
    fn add(&self, a: u128, b: u128) -> u128 {
        match *self {
            KeyOps::Packed { q, r, bits, mask } => {
                let mut out = 0u128;
                for i in 0..r {
                    let s = bits as usize * i;
                    let mut x = ((a >> s) & mask) + ((b >> s) & mask);
                    if x >= q {
                        x -= q;
                    }
                    out |= x << s;
                }
                out
            }
            KeyOps::Radix { q, r } => add_keys(a, b, q, r),
        }
    }

    #[inline]
    fn neg(&self, a: u128) -> u128 {
        match *self {
            KeyOps::Packed { q, r, bits, mask } => {
                let mut out = 0u128;
                for i in 0..r {
                    let s = bits as usize * i;
                    let x = (a >> s) & mask;
                    if x != 0 {
                        out |= (q - x) << s;
                    }
                }
                out
            }
            KeyOps::Radix { q, r } => neg_key(a, q, r),
        }
    }
}

type KeyMap = FxHashMap<u128, u128>;

fn convolve(a: &KeyMap, b: &[(u128, u128)], ops: &KeyOps, budget: &Budget) -> Result<KeyMap> {
    let work = a.len() as u128 * b.len() as u128;
    if work > budget.max_conv {
        return Err(Error::budget("convolution step", work, budget.max_conv));
    }
    let mut out = KeyMap::default();
    out.reserve(a.len().max(b.len()));
    for (&ka, &ca) in a {
        for &(kb, cb) in b {
            let k = ops.add(ka, kb);
            let v = ca.checked_mul(cb).ok_or_else(overflow)?;
            let slot = out.entry(k).or_insert(0);
            *slot = slot.checked_add(v).ok_or_else(overflow)?;
        }
        if out.len() as u128 > budget.max_keys {
            return Err(Error::budget(
                "convolution keys",
                out.len() as u128,
                budget.max_keys,
            ));
        }
    }
    Ok(out)
}

/// Number of ways the per-component values sum to zero, by convolving two
/// balanced groups and matching `v` against `-v`.
pub fn count_zero(hists: &[Histogram], budget: &Budget) -> Result<u128> {
    if hists.is_empty() {
        return Ok(1);
    }
    if hists.iter().any(|h| h.entries.is_empty()) {
        return Ok(0);
    }
    let ops = KeyOps::new(hists[0].q, hists[0].r);
    let packed: Vec<Vec<(u128, u128)>> = hists
        .iter()
        .map(|h| h.entries.iter().map(|&(k, c)| (ops.pack(k), c)).collect())
        .collect();
    let mut order: Vec<usize> = (0..hists.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(hists[i].entries.len()));
    let (mut ga, mut gb) = (Vec::new(), Vec::new());
    let (mut la, mut lb) = (0f64, 0f64);
    for i in order {
        let w = (hists[i].entries.len() as f64).ln();
        if la <= lb {
            ga.push(i);
            la += w;
        } else {
            gb.push(i);
            lb += w;
        }
    }
    let group = |g: &[usize]| -> Result<KeyMap> {
        let mut acc = KeyMap::default();
        acc.insert(0, 1);
        for &i in g {
            acc = convolve(&acc, &packed[i], &ops, budget)?;
        }
        Ok(acc)
    };
    // The last histogram of the second group is streamed against the
    // first group's table instead of being convolved in.
    if gb.is_empty() {
        gb.extend(ga.pop());
    }
    let last = gb.pop().expect("at least one histogram");
    let a = group(&ga)?;
    let b = group(&gb)?;
    let work = b.len() as u128 * packed[last].len() as u128;
    if work > budget.max_conv {
        return Err(Error::budget("convolution step", work, budget.max_conv));
    }
    let mut total = 0u128;
    for (&kb, &cb) in &b {
        for &(kl, cl) in &packed[last] {
            if let Some(&ca) = a.get(&ops.neg(ops.add(kb, kl))) {
                total = ca
                    .checked_mul(cb)
                    .and_then(|v| v.checked_mul(cl))
                    .and_then(|v| total.checked_add(v))
                    .ok_or_else(overflow)?;
            }
        }
    }
    Ok(total)
}

/// Per-component exponential sums `sum_v h(v) e(a.v/q)` for one `a`.
pub fn transform(h: &Histogram, a: &[u64], roots: &[CDd]) -> CDd {
    let q = h.q;
    let mut v = vec![0u64; h.r];
    let mut acc = CDd::ZERO;
    for &(k, c) in &h.entries {
        decode(k, q, &mut v);
        let phase = v
            .iter()
            .zip(a)
            .fold(0u128, |s, (&x, &y)| (s + x as u128 * y as u128) % q as u128)
            as usize;
        let w = Dd::from_i128(c as i128);
        let z = roots[phase];
        acc += CDd::new(z.re * w, z.im * w);
    }
    acc
}

/// Complete sum `C(q, a)` as a product of component transforms.
pub fn gauss_from_histograms(hists: &[Histogram], a: &[u64], roots: &[CDd]) -> CDd {
    hists
        .iter()
        .fold(CDd::ONE, |acc, h| acc * transform(h, a, roots))
}

/// Which `a` vectors a Gauss-sum batch runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ASet {
    All,
    /// `gcd(a_1, .., a_R, q) = 1`.
    Primitive,
}

/// `sum_a C(q, a)` over the chosen set, accumulated in a fixed order.
pub fn gauss_total(
    hists: &[Histogram],
    q: u64,
    r: usize,
    set: ASet,
    budget: &Budget,
) -> Result<CDd> {
    let n_a = (q as u128).checked_pow(r as u32).unwrap_or(u128::MAX);
    let per_a: u128 = hists
        .iter()
        .map(|h| h.entries.len() as u128)
        .sum::<u128>()
        .max(1);
    let cost = n_a.saturating_mul(per_a);
    if cost > budget.max_gauss {
        return Err(Error::budget(
            format!("Gauss sums mod {q}"),
            cost,
            budget.max_gauss,
        ));
    }
    let roots = roots_of_unity(q);
    Ok(reduce::chunked(
        n_a as u64,
        1024,
        CDd::ZERO,
        |range| {
            let mut a = vec![0u64; r];
            let mut acc = CDd::ZERO;
            for i in range {
                decode(i as u128, q, &mut a);
                if set == ASet::Primitive && a.iter().fold(q, |g, &x| gcd(g, x)) != 1 {
                    continue;
                }
                acc += gauss_from_histograms(hists, &a, &roots);
            }
            acc
        },
        |x, y| x + y,
    ))
}

/// Projective representatives of `P^{R-1}(F_p)`: first nonzero entry 1.
pub fn projective_points(p: u64, r: usize) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    for lead in 0..r {
        let free = r - lead - 1;
        let count = p.pow(free as u32);
        for i in 0..count {
            let mut v = vec![0u64; r];
            v[lead] = 1;
            let mut t = i;
            for slot in v.iter_mut().skip(lead + 1) {
                *slot = t % p;
                t /= p;
            }
            out.push(v);
        }
    }
    out
}

/// Sorted copy of a histogram's entries as a map, for tests and reports.
pub fn as_map(h: &Histogram) -> BTreeMap<Vec<u64>, u128> {
    let mut v = vec![0u64; h.r];
    h.entries
        .iter()
        .map(|&(k, c)| {
            decode(k, h.q, &mut v);
            (v.clone(), c)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_system;

    #[test]
    fn key_arithmetic_round_trips() {
        let q = 7;
        let a = encode(&[3, 6, 1], q);
        let b = encode(&[5, 2, 6], q);
        let mut out = [0u64; 3];
        decode(add_keys(a, b, q, 3), q, &mut out);
        assert_eq!(out, [1, 1, 0]);
        decode(neg_key(a, q, 3), q, &mut out);
        assert_eq!(out, [4, 1, 6]);
    }

    #[test]
    fn packed_keys_agree_with_radix_keys() {
        let (q, r) = (10, 3);
        let ops = KeyOps::new(q, r);
        assert!(matches!(ops, KeyOps::Packed { bits: 4, .. }));
        let radix = KeyOps::Radix { q, r };
        for (x, y) in [
            ([3, 9, 0], [7, 9, 5]),
            ([0, 0, 0], [9, 1, 4]),
            ([5, 5, 5], [5, 5, 5]),
        ] {
            let (a, b) = (encode(&x, q), encode(&y, q));
            assert_eq!(ops.add(ops.pack(a), ops.pack(b)), ops.pack(radix.add(a, b)));
            assert_eq!(ops.neg(ops.pack(a)), ops.pack(radix.neg(a)));
        }
        // 2 bits per field would need 160 bits here.
        assert!(matches!(KeyOps::new(3, 80), KeyOps::Radix { .. }));
    }

    #[test]
    fn squares_mod_five() {
        let s = parse_system("vars 2\nx1^2 + x2^2").unwrap();
        let c = Components::new(&s);
        let h = c.histograms(5, &Filter::None, &Budget::default()).unwrap();
        assert_eq!(h.len(), 2);
        assert_eq!(as_map(&h[0]), BTreeMap::from([(vec![1], 2), (vec![4], 2)]));
        assert_eq!(count_zero(&h, &Budget::default()).unwrap(), 8);
    }

    #[test]
    fn projective_point_counts() {
        assert_eq!(projective_points(5, 1), vec![vec![1]]);
        assert_eq!(projective_points(5, 2).len(), 6);
        assert_eq!(projective_points(3, 3).len(), 13);
    }

    #[test]
    fn budget_refusal_is_explicit() {
        let s = parse_system("vars 6\nx1*x2 + x3*x4 + x5*x6 + x1*x3 + x3*x5").unwrap();
        let c = Components::new(&s);
        let tight = Budget {
            max_scan: 1000,
            ..Budget::default()
        };
        assert!(matches!(
            c.histogram(0, 101, &Filter::None, &tight),
            Err(Error::Budget { .. })
        ));
    }
}

//! Double-double arithmetic (~106-bit significand) and the unit-circle
//! evaluations `e(x) = exp(2 pi i x)` built on it.
//!
//! Every exponential sum in the crate accumulates in [`CDd`]; phases are
//! reduced modulo 1 before any trigonometry so that large integer arguments
//! never reach `sin`/`cos`.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

// 2*pi as a double-double.
#[allow(clippy::approx_constant)]
const TWO_PI: Dd = Dd {
    hi: 6.283185307179586,
    lo: 2.4492935982947064e-16,
};

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    #[inline]
    pub fn new(hi: f64, lo: f64) -> Self {
        let (hi, lo) = two_sum(hi, lo);
        Dd { hi, lo }
    }

    /// Exact for every `|v| < 2^106`.
    pub fn from_i128(v: i128) -> Self {
        let hi = v as f64;
        // `hi` rounds `v`; the remainder is exactly representable.
        let rest = v - hi as i128;
        Dd::new(hi, rest as f64)
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let e = e + self.lo * b;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    /// Fractional part in `[0, 1)`, computed exactly.
    pub fn frac(self) -> Self {
        // Subtracting integers in double-double keeps every bit of the
        // fractional part; the low word may push the sum outside `[0, 1)`,
        // which the shifts below correct.
        let mut r = self - Dd::from(self.hi.floor());
        let f = r.hi.floor();
        if f != 0.0 {
            r = r - Dd::from(f);
        }
        if r.hi < 0.0 || (r.hi == 0.0 && r.lo < 0.0) {
            r += Dd::ONE;
        }
        if r.hi >= 1.0 {
            r = r - Dd::ONE;
        }
        r
    }
}

impl From<f64> for Dd {
    fn from(v: f64) -> Self {
        Dd { hi: v, lo: 0.0 }
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let e = e + t;
        let (s, e) = quick_two_sum(s, e);
        let e = e + f;
        let (hi, lo) = quick_two_sum(s, e);
        Dd { hi, lo }
    }
}

impl AddAssign for Dd {
    #[inline]
    fn add_assign(&mut self, b: Dd) {
        *self = *self + b;
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from(q3)
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

/// Complex number with double-double parts.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CDd {
    pub re: Dd,
    pub im: Dd,
}

impl CDd {
    pub const ZERO: CDd = CDd {
        re: Dd::ZERO,
        im: Dd::ZERO,
    };
    pub const ONE: CDd = CDd {
        re: Dd::ONE,
        im: Dd::ZERO,
    };

    pub fn new(re: Dd, im: Dd) -> Self {
        CDd { re, im }
    }

    pub fn scale(self, k: f64) -> Self {
        CDd {
            re: self.re.mul_f64(k),
            im: self.im.mul_f64(k),
        }
    }

    pub fn conj(self) -> Self {
        CDd {
            re: self.re,
            im: -self.im,
        }
    }

    pub fn norm(self) -> f64 {
        self.re.to_f64().hypot(self.im.to_f64())
    }

    pub fn to_pair(self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }
}

impl Add for CDd {
    type Output = CDd;
    #[inline]
    fn add(self, b: CDd) -> CDd {
        CDd {
            re: self.re + b.re,
            im: self.im + b.im,
        }
    }
}

impl AddAssign for CDd {
    #[inline]
    fn add_assign(&mut self, b: CDd) {
        self.re += b.re;
        self.im += b.im;
    }
}

impl Sub for CDd {
    type Output = CDd;
    fn sub(self, b: CDd) -> CDd {
        CDd {
            re: self.re - b.re,
            im: self.im - b.im,
        }
    }
}

impl Mul for CDd {
    type Output = CDd;
    #[inline]
    fn mul(self, b: CDd) -> CDd {
        CDd {
            re: self.re * b.re - self.im * b.im,
            im: self.re * b.im + self.im * b.re,
        }
    }
}

/// `(cos 2 pi t, sin 2 pi t)` for `t` in `[0, 1/8]`, by Taylor series.
fn cos_sin_octant(t: Dd) -> (Dd, Dd) {
    let x = t * TWO_PI;
    let x2 = x * x;
    // sin
    let mut term = x;
    let mut sin = x;
    let mut k = 1.0;
    loop {
        term = (term * x2).mul_f64(-1.0 / ((k + 1.0) * (k + 2.0)));
        sin += term;
        k += 2.0;
        if term.hi.abs() < 1e-34 {
            break;
        }
    }
    // cos
    let mut term = Dd::ONE;
    let mut cos = Dd::ONE;
    let mut k = 0.0;
    loop {
        term = (term * x2).mul_f64(-1.0 / ((k + 1.0) * (k + 2.0)));
        cos += term;
        k += 2.0;
        if term.hi.abs() < 1e-34 {
            break;
        }
    }
    (cos, sin)
}

/// `e(t) = exp(2 pi i t)` for an arbitrary double-double phase.
pub fn expi(t: Dd) -> CDd {
    let t = t.frac();
    let scaled = t.mul_f64(8.0);
    let mut oct = scaled.hi.floor();
    let mut rem = Dd::new(scaled.hi - oct, scaled.lo);
    if rem.hi < 0.0 {
        rem = Dd::new(rem.hi + 1.0, rem.lo);
        oct -= 1.0;
    }
    let oct = (oct as i64).rem_euclid(8) as u8;
    // t = (oct + rem) / 8 with rem in [0, 1).
    let r = rem.mul_f64(0.125);
    let comp = |x: Dd| Dd::from(0.125) - x;
    let (c, s) = match oct {
        0 => cos_sin_octant(r),
        1 => {
            let (c, s) = cos_sin_octant(comp(r));
            (s, c)
        }
        2 => {
            let (c, s) = cos_sin_octant(r);
            (-s, c)
        }
        3 => {
            let (c, s) = cos_sin_octant(comp(r));
            (-c, s)
        }
        4 => {
            let (c, s) = cos_sin_octant(r);
            (-c, -s)
        }
        5 => {
            let (c, s) = cos_sin_octant(comp(r));
            (-s, -c)
        }
        6 => {
            let (c, s) = cos_sin_octant(r);
            (s, -c)
        }
        _ => {
            let (c, s) = cos_sin_octant(comp(r));
            (c, -s)
        }
    };
    CDd::new(c, s)
}

/// `e(k/q)` for `k = 0..q`, each entry accurate to double-double precision.
pub fn roots_of_unity(q: u64) -> Vec<CDd> {
    let qd = Dd::from(q as f64);
    (0..q).map(|k| expi(Dd::from(k as f64) / qd)).collect()
}

/// Reduces `alpha * value` modulo 1 without losing the integer part's
/// precision: the product of an `f64` and an integer below `2^106` is formed
/// exactly and each piece is reduced separately.
pub fn phase_of(alpha: f64, value: i128) -> Dd {
    let v = Dd::from_i128(value);
    let (p1, e1) = two_prod(alpha, v.hi);
    let (p2, e2) = two_prod(alpha, v.lo);
    let mut acc = Dd::new(p1, 0.0).frac();
    acc = (acc + Dd::new(e1, 0.0).frac()).frac();
    acc = (acc + Dd::new(p2, 0.0).frac()).frac();
    acc = (acc + Dd::new(e2, 0.0).frac()).frac();
    acc
}

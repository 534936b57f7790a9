//! Double-double arithmetic for extended-precision moment entries.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

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

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn recip(self) -> Self {
        // one Newton step on 1/hi
        let q = 1.0 / self.hi;
        let r = Dd::ONE - self * Dd::from_f64(q);
        Dd::from_f64(q) + Dd::from_f64(r.hi * q)
    }

    pub fn powi(self, n: u32) -> Self {
        let mut acc = Dd::ONE;
        let mut base = self;
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComplexDd {
    pub re: Dd,
    pub im: Dd,
}

impl ComplexDd {
    pub const ZERO: ComplexDd = ComplexDd { re: Dd::ZERO, im: Dd::ZERO };
    pub const ONE: ComplexDd = ComplexDd { re: Dd::ONE, im: Dd::ZERO };

    pub fn from_c64(z: Complex64) -> Self {
        ComplexDd { re: Dd::from_f64(z.re), im: Dd::from_f64(z.im) }
    }

    pub fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn conj(self) -> Self {
        ComplexDd { re: self.re, im: -self.im }
    }

    pub fn scale(self, s: Dd) -> Self {
        ComplexDd { re: self.re * s, im: self.im * s }
    }

    pub fn powu(self, n: u32) -> Self {
        let mut acc = ComplexDd::ONE;
        let mut base = self;
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }
}

impl Add for ComplexDd {
    type Output = ComplexDd;
    fn add(self, o: ComplexDd) -> ComplexDd {
        ComplexDd { re: self.re + o.re, im: self.im + o.im }
    }
}

impl Mul for ComplexDd {
    type Output = ComplexDd;
    fn mul(self, o: ComplexDd) -> ComplexDd {
        ComplexDd { re: self.re * o.re - self.im * o.im, im: self.re * o.im + self.im * o.re }
    }
}

/// `k!` carried in double-double (exact through 22!, then correctly rounded products).
pub fn factorial_dd(k: u32) -> Dd {
    (1..=k).fold(Dd::ONE, |acc, j| acc * Dd::from_f64(j as f64))
}

/// `k (k-1) … (k-j+1)` in double-double.
pub fn falling_dd(k: u32, j: u32) -> Dd {
    if j > k {
        return Dd::ZERO;
    }
    (k - j + 1..=k).fold(Dd::ONE, |acc, v| acc * Dd::from_f64(v as f64))
}

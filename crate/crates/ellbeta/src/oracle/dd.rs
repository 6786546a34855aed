//! Double-double arithmetic: unevaluated sums of two f64 giving about
//! 31 significant decimal digits. Error-free transforms follow Dekker
//! and Knuth; exp and sin/cos use argument reduction plus Taylor series.
//!
//! This module backs the golden-value oracle only. It deliberately shares
//! nothing with the fast f64 evaluation path.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = a.mul_add(b, -p);
    (p, e)
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
    /// pi to double-double precision.
    pub const PI: Dd = Dd {
        hi: 3.141592653589793116e0,
        lo: 1.224646799147353207e-16,
    };
    /// ln 2 to double-double precision.
    pub const LN2: Dd = Dd {
        hi: 6.931471805599452862e-1,
        lo: 2.319046813846299558e-17,
    };

    #[inline]
    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn new(hi: f64, lo: f64) -> Dd {
        let (s, e) = quick_two_sum(hi, lo);
        Dd { hi: s, lo: e }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Dd {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    /// Multiply by a power of two (exact).
    #[inline]
    pub fn ldexp(self, n: i32) -> Dd {
        let f = 2.0f64.powi(n);
        Dd {
            hi: self.hi * f,
            lo: self.lo * f,
        }
    }

    pub fn recip(self) -> Dd {
        Dd::ONE / self
    }

    pub fn sqr(self) -> Dd {
        self * self
    }

    /// exp(x) by reduction x = m ln2 + r, |r| <= ln2/2, and a Taylor series.
    pub fn exp(self) -> Dd {
        if self.hi == 0.0 && self.lo == 0.0 {
            return Dd::ONE;
        }
        if self.hi > 709.0 {
            return Dd::from_f64(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return Dd::ZERO;
        }
        let m = (self.hi / std::f64::consts::LN_2).round();
        let r = self - Dd::LN2 * Dd::from_f64(m);
        // Taylor: sum r^k / k!. |r| <= 0.35 needs ~28 terms for 1e-33.
        let mut term = r;
        let mut sum = Dd::ONE + r;
        let mut k = 2.0f64;
        for _ in 0..40 {
            term = term * r / Dd::from_f64(k);
            sum = sum + term;
            if term.hi.abs() < 1e-35 * sum.hi.abs() {
                break;
            }
            k += 1.0;
        }
        sum.ldexp(m as i32)
    }

    /// Simultaneous sin and cos via reduction modulo pi/2.
    pub fn sin_cos(self) -> (Dd, Dd) {
        let half_pi = Dd::PI.ldexp(-1);
        let k = (self.hi / (std::f64::consts::PI / 2.0)).round();
        let r = self - half_pi * Dd::from_f64(k);
        let (s, c) = sin_cos_taylor(r);
        match (k as i64).rem_euclid(4) {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }
}

/// Taylor sin and cos for |r| <= pi/4.
fn sin_cos_taylor(r: Dd) -> (Dd, Dd) {
    let r2 = r * r;
    let mut s = r;
    let mut term = r;
    let mut n = 1.0f64;
    for _ in 0..30 {
        term = term * r2 / Dd::from_f64((n + 1.0) * (n + 2.0));
        term = -term;
        s = s + term;
        if term.hi.abs() < 1e-36 {
            break;
        }
        n += 2.0;
    }
    let mut c = Dd::ONE;
    let mut term = Dd::ONE;
    let mut n = 0.0f64;
    for _ in 0..30 {
        term = term * r2 / Dd::from_f64((n + 1.0) * (n + 2.0));
        term = -term;
        c = c + term;
        if term.hi.abs() < 1e-36 {
            break;
        }
        n += 2.0;
    }
    (s, c)
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

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, rhs: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, rhs.hi);
        let (t1, t2) = two_sum(self.lo, rhs.lo);
        let (s1, s2) = {
            let s2 = s2 + t1;
            let (s1, s2) = quick_two_sum(s1, s2);
            (s1, s2 + t2)
        };
        let (hi, lo) = quick_two_sum(s1, s2);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, rhs: Dd) -> Dd {
        self + (-rhs)
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, rhs: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, rhs.hi);
        let p2 = p2 + self.hi * rhs.lo + self.lo * rhs.hi;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, rhs: Dd) -> Dd {
        let q1 = self.hi / rhs.hi;
        let r = self - rhs * Dd::from_f64(q1);
        let q2 = r.hi / rhs.hi;
        let r2 = r - rhs * Dd::from_f64(q2);
        let q3 = r2.hi / rhs.hi;
        let (s, e) = quick_two_sum(q1, q2);
        Dd::new(s, e + q3)
    }
}

/// Complex numbers over Dd.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DdC {
    pub re: Dd,
    pub im: Dd,
}

impl DdC {
    pub const ZERO: DdC = DdC {
        re: Dd::ZERO,
        im: Dd::ZERO,
    };
    pub const ONE: DdC = DdC {
        re: Dd::ONE,
        im: Dd::ZERO,
    };

    pub fn new(re: Dd, im: Dd) -> DdC {
        DdC { re, im }
    }

    pub fn from_f64s(re: f64, im: f64) -> DdC {
        DdC {
            re: Dd::from_f64(re),
            im: Dd::from_f64(im),
        }
    }

    pub fn from_c64(c: num_complex::Complex64) -> DdC {
        DdC::from_f64s(c.re, c.im)
    }

    pub fn to_c64(self) -> num_complex::Complex64 {
        num_complex::Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn conj(self) -> DdC {
        DdC {
            re: self.re,
            im: -self.im,
        }
    }

    pub fn norm_sqr(self) -> Dd {
        self.re * self.re + self.im * self.im
    }

    pub fn recip(self) -> DdC {
        let d = self.norm_sqr();
        DdC {
            re: self.re / d,
            im: -self.im / d,
        }
    }

    /// exp(re + i im) = e^re (cos im + i sin im).
    pub fn exp(self) -> DdC {
        let m = self.re.exp();
        let (s, c) = self.im.sin_cos();
        DdC {
            re: m * c,
            im: m * s,
        }
    }

    /// exp(2 pi i z), the workhorse for base and argument construction.
    pub fn exp_2pi_i(self) -> DdC {
        let two_pi = Dd::PI.ldexp(1);
        let w = DdC {
            re: -two_pi * self.im,
            im: two_pi * self.re,
        };
        w.exp()
    }

    pub fn scale(self, f: Dd) -> DdC {
        DdC {
            re: self.re * f,
            im: self.im * f,
        }
    }
}

impl Neg for DdC {
    type Output = DdC;
    fn neg(self) -> DdC {
        DdC {
            re: -self.re,
            im: -self.im,
        }
    }
}

impl Add for DdC {
    type Output = DdC;
    fn add(self, rhs: DdC) -> DdC {
        DdC {
            re: self.re + rhs.re,
            im: self.im + rhs.im,
        }
    }
}

impl Sub for DdC {
    type Output = DdC;
    fn sub(self, rhs: DdC) -> DdC {
        DdC {
            re: self.re - rhs.re,
            im: self.im - rhs.im,
        }
    }
}

impl Mul for DdC {
    type Output = DdC;
    fn mul(self, rhs: DdC) -> DdC {
        DdC {
            re: self.re * rhs.re - self.im * rhs.im,
            im: self.re * rhs.im + self.im * rhs.re,
        }
    }
}

impl Div for DdC {
    type Output = DdC;
    fn div(self, rhs: DdC) -> DdC {
        let d = rhs.norm_sqr();
        let n = self * rhs.conj();
        DdC {
            re: n.re / d,
            im: n.im / d,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Dd, b: Dd, tol: f64) -> bool {
        (a - b).abs().to_f64() <= tol * (1.0 + b.abs().to_f64())
    }

    #[test]
    fn add_mul_carry_extra_precision() {
        // (1 + 2^-60) - 1 == 2^-60 exactly in dd, lost in f64.
        let tiny = 2.0f64.powi(-60);
        let x = Dd::ONE + Dd::from_f64(tiny);
        let d = x - Dd::ONE;
        assert_eq!(d.to_f64(), tiny);
    }

    #[test]
    fn division_inverse() {
        let a = Dd::from_f64(3.0);
        let inv = Dd::ONE / a;
        let prod = inv * a;
        assert!(close(prod, Dd::ONE, 1e-31));
    }

    #[test]
    fn exp_ln2_is_two() {
        let e = Dd::LN2.exp();
        assert!(close(e, Dd::from_f64(2.0), 1e-30));
    }

    #[test]
    fn exp_additivity() {
        let a = Dd::from_f64(0.7);
        let b = Dd::from_f64(-1.3);
        let lhs = (a + b).exp();
        let rhs = a.exp() * b.exp();
        assert!(close(lhs, rhs, 1e-30));
    }

    #[test]
    fn sincos_pythagoras() {
        for &x in &[0.1, 1.0, 2.5, -4.0, 10.0, 100.0] {
            let (s, c) = Dd::from_f64(x).sin_cos();
            let one = s * s + c * c;
            assert!(close(one, Dd::ONE, 1e-30), "x = {x}");
        }
    }

    #[test]
    fn complex_exp_i_pi_is_minus_one() {
        let z = DdC::new(Dd::ZERO, Dd::PI);
        let v = z.exp();
        assert!((v.re.to_f64() + 1.0).abs() < 1e-31);
        assert!(v.im.to_f64().abs() < 1e-31);
    }

    #[test]
    fn complex_division_roundtrip() {
        let a = DdC::from_f64s(1.3, -0.7);
        let b = DdC::from_f64s(-0.2, 2.1);
        let r = a / b * b - a;
        assert!(r.re.to_f64().abs() < 1e-30 && r.im.to_f64().abs() < 1e-30);
    }

    #[test]
    fn exp_2pi_i_unit_circle() {
        let z = DdC::from_f64s(0.25, 0.0);
        let v = z.exp_2pi_i();
        // exp(2 pi i / 4) = i.
        assert!(v.re.to_f64().abs() < 1e-30);
        assert!((v.im.to_f64() - 1.0).abs() < 1e-30);
    }
}

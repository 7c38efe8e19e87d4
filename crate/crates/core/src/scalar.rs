//! Scalars usable throughout the generic numerical pipeline.
//!
//! Everything that feeds the log posterior is written against [`Real`], which
//! is implemented for `f64` and for the forward-mode [`Dual`] number. A
//! `Dual<N>` carries `N` tangent directions at once, so a gradient of
//! dimension `d` costs `ceil(d / N)` evaluations of the pipeline.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

pub trait Real:
    Copy
    + Debug
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    /// Number of tangent directions carried alongside the value.
    const TANGENTS: usize;

    fn from_f64(v: f64) -> Self;
    fn value(self) -> f64;
    fn tangent(self, k: usize) -> f64;
    /// Builds a scalar from a value and its tangents; `f64` ignores the tangents.
    fn from_parts(value: f64, tangents: &[f64]) -> Self;

    fn sqrt(self) -> Self;
    fn ln(self) -> Self;
    fn exp(self) -> Self;

    #[inline]
    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    #[inline]
    fn one() -> Self {
        Self::from_f64(1.0)
    }

    #[inline]
    fn powi(self, n: i32) -> Self {
        let mut acc = Self::one();
        let base = if n < 0 { Self::one() / self } else { self };
        for _ in 0..n.unsigned_abs() {
            acc *= base;
        }
        acc
    }

    #[inline]
    fn abs(self) -> Self {
        if self.value() < 0.0 {
            -self
        } else {
            self
        }
    }

    #[inline]
    fn is_finite(self) -> bool {
        self.value().is_finite()
    }
}

impl Real for f64 {
    const TANGENTS: usize = 0;

    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(self) -> f64 {
        self
    }
    #[inline]
    fn tangent(self, _k: usize) -> f64 {
        0.0
    }
    #[inline]
    fn from_parts(value: f64, _tangents: &[f64]) -> Self {
        value
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    #[inline]
    fn abs(self) -> Self {
        f64::abs(self)
    }
}

/// Forward-mode dual number with `N` simultaneous tangent directions.
#[derive(Clone, Copy, Debug)]
pub struct Dual<const N: usize> {
    pub re: f64,
    pub du: [f64; N],
}

impl<const N: usize> Dual<N> {
    pub fn constant(re: f64) -> Self {
        Self { re, du: [0.0; N] }
    }

    /// A variable seeded along tangent direction `k` (no seed if `k >= N`).
    pub fn variable(re: f64, k: usize) -> Self {
        let mut du = [0.0; N];
        if k < N {
            du[k] = 1.0;
        }
        Self { re, du }
    }

    #[inline]
    fn chain(self, f: f64, df: f64) -> Self {
        let mut du = self.du;
        for d in du.iter_mut() {
            *d *= df;
        }
        Self { re: f, du }
    }
}

impl<const N: usize> PartialEq for Dual<N> {
    fn eq(&self, other: &Self) -> bool {
        self.re == other.re
    }
}

impl<const N: usize> PartialOrd for Dual<N> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.re.partial_cmp(&other.re)
    }
}

impl<const N: usize> Add for Dual<N> {
    type Output = Self;
    #[inline]
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl<const N: usize> AddAssign for Dual<N> {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        self.re += rhs.re;
        for (a, b) in self.du.iter_mut().zip(rhs.du.iter()) {
            *a += b;
        }
    }
}

impl<const N: usize> Sub for Dual<N> {
    type Output = Self;
    #[inline]
    fn sub(mut self, rhs: Self) -> Self {
        self -= rhs;
        self
    }
}

impl<const N: usize> SubAssign for Dual<N> {
    #[inline]
    fn sub_assign(&mut self, rhs: Self) {
        self.re -= rhs.re;
        for (a, b) in self.du.iter_mut().zip(rhs.du.iter()) {
            *a -= b;
        }
    }
}

impl<const N: usize> Mul for Dual<N> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let mut du = [0.0; N];
        for (k, d) in du.iter_mut().enumerate() {
            *d = self.du[k] * rhs.re + self.re * rhs.du[k];
        }
        Self {
            re: self.re * rhs.re,
            du,
        }
    }
}

impl<const N: usize> MulAssign for Dual<N> {
    #[inline]
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

impl<const N: usize> Div for Dual<N> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let inv = 1.0 / rhs.re;
        let re = self.re * inv;
        let mut du = [0.0; N];
        for (k, d) in du.iter_mut().enumerate() {
            *d = (self.du[k] - re * rhs.du[k]) * inv;
        }
        Self { re, du }
    }
}

impl<const N: usize> DivAssign for Dual<N> {
    #[inline]
    fn div_assign(&mut self, rhs: Self) {
        *self = *self / rhs;
    }
}

impl<const N: usize> Neg for Dual<N> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        let mut du = self.du;
        for d in du.iter_mut() {
            *d = -*d;
        }
        Self { re: -self.re, du }
    }
}

impl<const N: usize> Add<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn add(mut self, rhs: f64) -> Self {
        self.re += rhs;
        self
    }
}

impl<const N: usize> Sub<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn sub(mut self, rhs: f64) -> Self {
        self.re -= rhs;
        self
    }
}

impl<const N: usize> Mul<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn mul(mut self, rhs: f64) -> Self {
        self.re *= rhs;
        for d in self.du.iter_mut() {
            *d *= rhs;
        }
        self
    }
}

impl<const N: usize> Div<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: f64) -> Self {
        self * (1.0 / rhs)
    }
}

impl<const N: usize> Real for Dual<N> {
    const TANGENTS: usize = N;

    #[inline]
    fn from_f64(v: f64) -> Self {
        Self::constant(v)
    }
    #[inline]
    fn value(self) -> f64 {
        self.re
    }
    #[inline]
    fn tangent(self, k: usize) -> f64 {
        self.du[k]
    }
    #[inline]
    fn from_parts(value: f64, tangents: &[f64]) -> Self {
        let mut du = [0.0; N];
        du.copy_from_slice(&tangents[..N]);
        Self { re: value, du }
    }
    #[inline]
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        self.chain(s, 0.5 / s)
    }
    #[inline]
    fn ln(self) -> Self {
        self.chain(self.re.ln(), 1.0 / self.re)
    }
    #[inline]
    fn exp(self) -> Self {
        let e = self.re.exp();
        self.chain(e, e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type D = Dual<2>;

    fn fd(f: impl Fn(f64) -> f64, x: f64) -> f64 {
        let h = 1e-6;
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn elementary_derivatives_match_finite_differences() {
        let x = 0.7;
        let d = D::variable(x, 0);
        let cases: Vec<(D, f64)> = vec![
            (d.sqrt(), fd(f64::sqrt, x)),
            (d.ln(), fd(f64::ln, x)),
            (d.exp(), fd(f64::exp, x)),
            (d * d * d, fd(|v| v * v * v, x)),
            (D::one() / d, fd(|v| 1.0 / v, x)),
            (d.powi(-3), fd(|v| v.powi(-3), x)),
            ((d - 2.0) / (d + 1.0), fd(|v| (v - 2.0) / (v + 1.0), x)),
        ];
        for (got, want) in cases {
            assert!((got.du[0] - want).abs() < 1e-7, "{got:?} vs {want}");
            assert_eq!(got.du[1], 0.0);
        }
    }

    #[test]
    fn two_directions_are_independent() {
        let x = D::variable(1.5, 0);
        let y = D::variable(-0.5, 1);
        let f = x * y + x.exp() * 2.0;
        assert!((f.du[0] - (-0.5 + 2.0 * 1.5f64.exp())).abs() < 1e-12);
        assert!((f.du[1] - 1.5).abs() < 1e-12);
    }
}

//! Forward-mode automatic differentiation.
//!
//! Two small number types carry derivatives alongside values:
//!
//! * [`Taylor`] is a univariate truncated Taylor series (value plus the first
//!   [`TAYLOR_ORDER`] normalized derivatives). Radial profiles of the solid
//!   torus are evaluated on it so that exterior derivatives and parity checks at
//!   the axis come out of the same evaluation.
//! * [`Jet2`] is a bivariate second-order jet (value, gradient, Hessian). Planar
//!   Hamiltonians are written once against it; the vector field and the
//!   variational equations read the gradient and Hessian.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Highest derivative order tracked by [`Taylor`].
pub const TAYLOR_ORDER: usize = 4;
const N: usize = TAYLOR_ORDER + 1;

/// Truncated Taylor series `c[0] + c[1] h + ... + c[4] h^4` about a point.
///
/// Coefficients are normalized: `c[k] = f^(k)(r) / k!`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Taylor {
    c: [f64; N],
}

impl Taylor {
    pub const fn constant(value: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = value;
        Self { c }
    }

    /// The independent variable evaluated at `at`.
    pub const fn variable(at: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = at;
        c[1] = 1.0;
        Self { c }
    }

    pub const fn from_coefficients(c: [f64; N]) -> Self {
        Self { c }
    }

    pub fn coefficients(&self) -> &[f64; N] {
        &self.c
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// The `k`-th derivative (not normalized by `k!`).
    pub fn derivative(&self, k: usize) -> f64 {
        let mut fact = 1.0;
        for i in 2..=k {
            fact *= i as f64;
        }
        self.c[k] * fact
    }

    /// Series of the derivative. The top coefficient is lost and set to zero,
    /// so only orders `0..TAYLOR_ORDER` of the result are meaningful.
    pub fn differentiate(&self) -> Self {
        let mut c = [0.0; N];
        for (k, ck) in c.iter_mut().take(TAYLOR_ORDER).enumerate() {
            *ck = (k + 1) as f64 * self.c[k + 1];
        }
        Self { c }
    }

    /// Series of the antiderivative vanishing at the expansion point, shifted
    /// by `value`. The top coefficient of `self` is dropped.
    pub fn integrate_with(&self, value: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = value;
        for (k, ck) in c.iter_mut().enumerate().skip(1) {
            *ck = self.c[k - 1] / k as f64;
        }
        Self { c }
    }

    pub fn scale(self, s: f64) -> Self {
        let mut c = self.c;
        c.iter_mut().for_each(|x| *x *= s);
        Self { c }
    }

    pub fn recip(self) -> Self {
        Taylor::constant(1.0) / self
    }

    pub fn exp(self) -> Self {
        let mut e = [0.0; N];
        e[0] = self.c[0].exp();
        for k in 1..N {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += j as f64 * self.c[j] * e[k - j];
            }
            e[k] = acc / k as f64;
        }
        Self { c: e }
    }

    pub fn sqrt(self) -> Self {
        let mut s = [0.0; N];
        s[0] = self.c[0].sqrt();
        for k in 1..N {
            let mut acc = self.c[k];
            for j in 1..k {
                acc -= s[j] * s[k - j];
            }
            s[k] = acc / (2.0 * s[0]);
        }
        Self { c: s }
    }

    pub fn powi(self, n: u32) -> Self {
        let mut out = Taylor::constant(1.0);
        for _ in 0..n {
            out = out * self;
        }
        out
    }

    /// `true` when every odd-order derivative is below `tol` in magnitude.
    pub fn is_even(&self, tol: f64) -> bool {
        (1..N).step_by(2).all(|k| self.c[k].abs() <= tol)
    }

    /// `true` when every even-order derivative is below `tol` in magnitude.
    pub fn is_odd(&self, tol: f64) -> bool {
        (0..N).step_by(2).all(|k| self.c[k].abs() <= tol)
    }
}

impl Add for Taylor {
    type Output = Taylor;
    fn add(self, rhs: Taylor) -> Taylor {
        let mut c = self.c;
        for (a, b) in c.iter_mut().zip(rhs.c) {
            *a += b;
        }
        Taylor { c }
    }
}

impl Sub for Taylor {
    type Output = Taylor;
    fn sub(self, rhs: Taylor) -> Taylor {
        let mut c = self.c;
        for (a, b) in c.iter_mut().zip(rhs.c) {
            *a -= b;
        }
        Taylor { c }
    }
}

impl Neg for Taylor {
    type Output = Taylor;
    fn neg(self) -> Taylor {
        self.scale(-1.0)
    }
}

impl Mul for Taylor {
    type Output = Taylor;
    fn mul(self, rhs: Taylor) -> Taylor {
        let mut c = [0.0; N];
        for (k, out) in c.iter_mut().enumerate() {
            for j in 0..=k {
                *out += self.c[j] * rhs.c[k - j];
            }
        }
        Taylor { c }
    }
}

impl Div for Taylor {
    type Output = Taylor;
    fn div(self, rhs: Taylor) -> Taylor {
        let mut q = [0.0; N];
        for k in 0..N {
            let mut acc = self.c[k];
            for j in 1..=k {
                acc -= rhs.c[j] * q[k - j];
            }
            q[k] = acc / rhs.c[0];
        }
        Taylor { c: q }
    }
}

impl Add<f64> for Taylor {
    type Output = Taylor;
    fn add(mut self, rhs: f64) -> Taylor {
        self.c[0] += rhs;
        self
    }
}

impl Sub<f64> for Taylor {
    type Output = Taylor;
    fn sub(mut self, rhs: f64) -> Taylor {
        self.c[0] -= rhs;
        self
    }
}

impl Mul<f64> for Taylor {
    type Output = Taylor;
    fn mul(self, rhs: f64) -> Taylor {
        self.scale(rhs)
    }
}

/// Value, gradient and Hessian of a function of two variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub v: f64,
    pub g: [f64; 2],
    pub h: [[f64; 2]; 2],
}

impl Jet2 {
    pub const fn constant(v: f64) -> Self {
        Self {
            v,
            g: [0.0; 2],
            h: [[0.0; 2]; 2],
        }
    }

    /// Coordinate function `index` (0 for x, 1 for y) evaluated at `at`.
    pub fn variable(at: f64, index: usize) -> Self {
        let mut g = [0.0; 2];
        g[index] = 1.0;
        Self {
            v: at,
            g,
            h: [[0.0; 2]; 2],
        }
    }

    /// Both coordinate functions at `(x, y)`.
    pub fn coordinates(x: f64, y: f64) -> (Self, Self) {
        (Self::variable(x, 0), Self::variable(y, 1))
    }

    pub fn is_constant(&self) -> bool {
        self.g == [0.0; 2] && self.h == [[0.0; 2]; 2]
    }

    /// Apply a scalar function given its value and first two derivatives at
    /// `self.v`.
    pub fn map(self, f0: f64, f1: f64, f2: f64) -> Self {
        let mut h = [[0.0; 2]; 2];
        for (i, row) in h.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = f2 * self.g[i] * self.g[j] + f1 * self.h[i][j];
            }
        }
        Self {
            v: f0,
            g: [f1 * self.g[0], f1 * self.g[1]],
            h,
        }
    }

    /// Apply a scalar function whose Taylor expansion at `self.v` is `series`.
    pub fn compose(self, series: &Taylor) -> Self {
        self.map(series.value(), series.derivative(1), series.derivative(2))
    }

    pub fn scale(self, s: f64) -> Self {
        Self {
            v: self.v * s,
            g: [self.g[0] * s, self.g[1] * s],
            h: [
                [self.h[0][0] * s, self.h[0][1] * s],
                [self.h[1][0] * s, self.h[1][1] * s],
            ],
        }
    }

    pub fn recip(self) -> Self {
        let v = self.v;
        self.map(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }

    pub fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.map(s, 0.5 / s, -0.25 / (s * self.v))
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.map(e, e, e)
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.map(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.map(c, -s, -c)
    }

    pub fn square(self) -> Self {
        self * self
    }

    /// Two-argument arctangent `atan2(self, x)` with the usual branch cut on
    /// the negative x-axis.
    pub fn atan2(self, x: Jet2) -> Self {
        let y = self;
        let r2 = x.v * x.v + y.v * y.v;
        let r4 = r2 * r2;
        // Partials of atan2(y, x) with respect to (y, x).
        let fy = x.v / r2;
        let fx = -y.v / r2;
        let fyy = -2.0 * x.v * y.v / r4;
        let fxx = 2.0 * x.v * y.v / r4;
        let fxy = (y.v * y.v - x.v * x.v) / r4;
        let mut h = [[0.0; 2]; 2];
        for (i, row) in h.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = fyy * y.g[i] * y.g[j]
                    + fxy * (y.g[i] * x.g[j] + x.g[i] * y.g[j])
                    + fxx * x.g[i] * x.g[j]
                    + fy * y.h[i][j]
                    + fx * x.h[i][j];
            }
        }
        Self {
            v: y.v.atan2(x.v),
            g: [fy * y.g[0] + fx * x.g[0], fy * y.g[1] + fx * x.g[1]],
            h,
        }
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, o: Jet2) -> Jet2 {
        Jet2 {
            v: self.v + o.v,
            g: [self.g[0] + o.g[0], self.g[1] + o.g[1]],
            h: [
                [self.h[0][0] + o.h[0][0], self.h[0][1] + o.h[0][1]],
                [self.h[1][0] + o.h[1][0], self.h[1][1] + o.h[1][1]],
            ],
        }
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, o: Jet2) -> Jet2 {
        self + o.scale(-1.0)
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, o: Jet2) -> Jet2 {
        let mut h = [[0.0; 2]; 2];
        for (i, row) in h.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = self.v * o.h[i][j]
                    + o.v * self.h[i][j]
                    + self.g[i] * o.g[j]
                    + o.g[i] * self.g[j];
            }
        }
        Jet2 {
            v: self.v * o.v,
            g: [
                self.v * o.g[0] + o.v * self.g[0],
                self.v * o.g[1] + o.v * self.g[1],
            ],
            h,
        }
    }
}

impl Div for Jet2 {
    type Output = Jet2;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Jet2) -> Jet2 {
        self * o.recip()
    }
}

impl Add<f64> for Jet2 {
    type Output = Jet2;
    fn add(mut self, rhs: f64) -> Jet2 {
        self.v += rhs;
        self
    }
}

impl Sub<f64> for Jet2 {
    type Output = Jet2;
    fn sub(mut self, rhs: f64) -> Jet2 {
        self.v -= rhs;
        self
    }
}

impl Mul<f64> for Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: f64) -> Jet2 {
        self.scale(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn taylor_exp_of_variable_matches_factorials() {
        let t = Taylor::variable(0.3).exp();
        for k in 0..=TAYLOR_ORDER {
            assert!(close(t.derivative(k), 0.3f64.exp(), 1e-14));
        }
    }

    #[test]
    fn taylor_division_and_sqrt() {
        // 1 / (1 + r) at r = 0.5; derivatives (-1)^k k! / 1.5^(k+1)
        let r = Taylor::variable(0.5);
        let q = (r + 1.0).recip();
        let mut fact = 1.0;
        for k in 0..=TAYLOR_ORDER {
            if k > 0 {
                fact *= k as f64;
            }
            let expected = (-1f64).powi(k as i32) * fact / 1.5f64.powi(k as i32 + 1);
            assert!(close(q.derivative(k), expected, 1e-13));
        }
        let s = (r * r + 1.0).sqrt();
        // d/dr sqrt(1 + r^2) = r / sqrt(1 + r^2)
        assert!(close(s.derivative(1), 0.5 / 1.25f64.sqrt(), 1e-14));
    }

    #[test]
    fn differentiate_then_integrate_roundtrip() {
        let r = Taylor::variable(0.2);
        let f = (r * r * 3.0 + r).exp();
        let back = f.differentiate().integrate_with(f.value());
        for k in 0..TAYLOR_ORDER {
            assert!(close(back.coefficients()[k], f.coefficients()[k], 1e-13));
        }
    }

    #[test]
    fn jet2_polynomial_hessian() {
        // f = x^2 y + 3 y^2 at (2, -1)
        let (x, y) = Jet2::coordinates(2.0, -1.0);
        let f = x * x * y + y * y * 3.0;
        assert_eq!(f.v, -4.0 + 3.0);
        assert_eq!(f.g, [-(2.0 * 2.0), 4.0 - 6.0]);
        assert_eq!(f.h, [[-2.0, 4.0], [4.0, 6.0]]);
    }

    #[test]
    fn jet2_atan2_matches_finite_differences() {
        let f = |x: f64, y: f64| y.atan2(x);
        let (x0, y0) = (-0.7, 0.4);
        let (x, y) = Jet2::coordinates(x0, y0);
        let j = y.atan2(x);
        let h = 1e-5;
        let fx = (f(x0 + h, y0) - f(x0 - h, y0)) / (2.0 * h);
        let fy = (f(x0, y0 + h) - f(x0, y0 - h)) / (2.0 * h);
        let fxy = (f(x0 + h, y0 + h) - f(x0 + h, y0 - h) - f(x0 - h, y0 + h) + f(x0 - h, y0 - h))
            / (4.0 * h * h);
        assert!(close(j.g[0], fx, 1e-8));
        assert!(close(j.g[1], fy, 1e-8));
        assert!(close(j.h[0][1], fxy, 1e-5));
        assert!(close(j.h[1][0], fxy, 1e-5));
    }

    #[test]
    fn compose_uses_taylor_derivatives() {
        let (x, y) = Jet2::coordinates(0.3, 0.1);
        let s = x * x + y;
        let direct = s.exp();
        let via = s.compose(&Taylor::variable(s.v).exp());
        for i in 0..2 {
            assert!(close(direct.g[i], via.g[i], 1e-14));
            for j in 0..2 {
                assert!(close(direct.h[i][j], via.h[i][j], 1e-14));
            }
        }
    }
}

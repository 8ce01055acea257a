use serde::{Deserialize, Serialize};

use crate::jet::Taylor;
use crate::smooth::step;

/// A smooth function of the radius, evaluated together with its derivatives.
///
/// Profiles are expression trees so that they serialize with their
/// parameterization and differentiate exactly through [`Taylor`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadialFn {
    Constant {
        value: f64,
    },
    /// `sum c_k r^k`.
    Polynomial {
        coefficients: Vec<f64>,
    },
    /// `from` for `r <= start`, `to` for `r >= end`, flat-ended in between.
    SmoothStep {
        start: f64,
        end: f64,
        from: f64,
        to: f64,
    },
    /// `r^2` on `[0, r1]`, `q` on `[r2, 1]`, and `(1 - sigma) r^2 + sigma q`
    /// in between with `sigma` the flat-ended step from `r1` to `r2`.
    Bridge {
        q: f64,
        r1: f64,
        r2: f64,
    },
    /// `p + int_r^1 f'(x) s(x) dx`.
    StabilizerG {
        p: f64,
        f: Box<RadialFn>,
        s: Box<RadialFn>,
    },
    Sum {
        terms: Vec<RadialFn>,
    },
    Product {
        factors: Vec<RadialFn>,
    },
    Quotient {
        numerator: Box<RadialFn>,
        denominator: Box<RadialFn>,
    },
    Scaled {
        factor: f64,
        base: Box<RadialFn>,
    },
}

/// How a radial coefficient extends through the axis `r = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisParity {
    Even,
    Odd,
    Neither,
}

const QUAD_TOL: f64 = 1e-15;

fn integrate_piece<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let size = [a, m, b].iter().fold(1.0f64, |acc, &x| acc.max(f(x).abs()));
    let width = (b - a).abs().max(1e-3);
    let out = quadrature::integrate(f, a, b, QUAD_TOL * width * size);
    // The estimate bottoms out near rounding level, which grows with the
    // size of the integrand; bisect only above that.
    let floor = 1e-13 * width * size;
    if out.error_estimate <= floor || depth == 0 {
        return out.integral;
    }
    integrate_piece(f, a, m, depth - 1) + integrate_piece(f, m, b, depth - 1)
}

impl RadialFn {
    pub fn constant(value: f64) -> Self {
        RadialFn::Constant { value }
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn polynomial(coefficients: Vec<f64>) -> Self {
        RadialFn::Polynomial { coefficients }
    }

    pub fn smooth_step(start: f64, end: f64, from: f64, to: f64) -> Self {
        RadialFn::SmoothStep {
            start,
            end,
            from,
            to,
        }
    }

    pub fn scaled(self, factor: f64) -> Self {
        RadialFn::Scaled {
            factor,
            base: Box::new(self),
        }
    }

    pub fn plus(self, other: RadialFn) -> Self {
        RadialFn::Sum {
            terms: vec![self, other],
        }
    }

    pub fn times(self, other: RadialFn) -> Self {
        RadialFn::Product {
            factors: vec![self, other],
        }
    }

    pub fn over(self, other: RadialFn) -> Self {
        RadialFn::Quotient {
            numerator: Box::new(self),
            denominator: Box::new(other),
        }
    }

    pub fn is_identically(&self, v: f64) -> bool {
        matches!(self, RadialFn::Constant { value } if *value == v)
    }

    /// Taylor series about `r`.
    pub fn taylor(&self, r: f64) -> Taylor {
        match self {
            RadialFn::Constant { value } => Taylor::constant(*value),
            RadialFn::Polynomial { coefficients } => {
                let x = Taylor::variable(r);
                coefficients
                    .iter()
                    .rev()
                    .fold(Taylor::constant(0.0), |acc, &c| acc * x + c)
            }
            RadialFn::SmoothStep {
                start,
                end,
                from,
                to,
            } => step(Taylor::variable(r), *start, *end) * (to - from) + *from,
            RadialFn::Bridge { q, r1, r2 } => {
                let x = Taylor::variable(r);
                let sigma = step(x, *r1, *r2);
                (-sigma + 1.0) * x * x + sigma * *q
            }
            RadialFn::StabilizerG { p, f, s } => {
                let integrand = f.taylor(r).differentiate() * s.taylor(r);
                let value = p + self.stabilizer_integral(r);
                (-integrand).integrate_with(value)
            }
            RadialFn::Sum { terms } => terms
                .iter()
                .fold(Taylor::constant(0.0), |acc, t| acc + t.taylor(r)),
            RadialFn::Product { factors } => factors
                .iter()
                .fold(Taylor::constant(1.0), |acc, t| acc * t.taylor(r)),
            RadialFn::Quotient {
                numerator,
                denominator,
            } => numerator.taylor(r) / denominator.taylor(r),
            RadialFn::Scaled { factor, base } => base.taylor(r).scale(*factor),
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        match self {
            RadialFn::StabilizerG { p, .. } => p + self.stabilizer_integral(r),
            _ => self.taylor(r).value(),
        }
    }

    /// `k`-th derivative at `r`, for `k <= 4`.
    pub fn derivative(&self, r: f64, k: usize) -> f64 {
        self.taylor(r).derivative(k)
    }

    /// `int_r^1 f' s` for a stabilizer profile, split at the breakpoints of
    /// `f` and `s`.
    fn stabilizer_integral(&self, r: f64) -> f64 {
        if r >= 1.0 {
            return -self.stabilizer_integral_between(1.0, r);
        }
        self.stabilizer_integral_between(r, 1.0)
    }

    fn stabilizer_integral_between(&self, a: f64, b: f64) -> f64 {
        let RadialFn::StabilizerG { f, s, .. } = self else {
            return 0.0;
        };
        let mut cuts = vec![a, b];
        f.breakpoints(&mut cuts);
        s.breakpoints(&mut cuts);
        cuts.retain(|&c| c >= a && c <= b);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let integrand = |x: f64| f.taylor(x).derivative(1) * s.value(x);
        cuts.windows(2)
            .map(|w| integrate_piece(integrand, w[0], w[1], 8))
            .sum()
    }

    /// Radii at which the profile switches between closed-form pieces.
    pub fn breakpoints(&self, out: &mut Vec<f64>) {
        match self {
            RadialFn::Constant { .. } | RadialFn::Polynomial { .. } => {}
            RadialFn::SmoothStep { start, end, .. } => out.extend([*start, *end]),
            RadialFn::Bridge { r1, r2, .. } => out.extend([*r1, *r2]),
            RadialFn::StabilizerG { f, s, .. } => {
                f.breakpoints(out);
                s.breakpoints(out);
            }
            RadialFn::Sum { terms: v } | RadialFn::Product { factors: v } => {
                v.iter().for_each(|t| t.breakpoints(out))
            }
            RadialFn::Quotient {
                numerator,
                denominator,
            } => {
                numerator.breakpoints(out);
                denominator.breakpoints(out);
            }
            RadialFn::Scaled { base, .. } => base.breakpoints(out),
        }
    }

    /// Parity of the series at the axis, with odd-order (resp. even-order)
    /// coefficients below `tol` in magnitude.
    pub fn axis_parity(&self, tol: f64) -> AxisParity {
        let t = self.taylor(0.0);
        if t.is_even(tol) {
            AxisParity::Even
        } else if t.is_odd(tol) {
            AxisParity::Odd
        } else {
            AxisParity::Neither
        }
    }
}

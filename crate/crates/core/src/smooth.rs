//! Flat-ended smooth transition functions.
//!
//! The step is built from `phi(t) = exp(-1/t)`: it is exactly 0 for `t <= 0`,
//! exactly 1 for `t >= 1`, and every derivative vanishes at both ends.

use crate::jet::{Jet2, Taylor};

fn phi(t: Taylor) -> Taylor {
    (-t.recip()).exp()
}

/// Smooth step `sigma(t)` evaluated on a Taylor series in `t`.
pub fn unit_step(t: Taylor) -> Taylor {
    let t0 = t.value();
    if t0 <= 0.0 {
        return Taylor::constant(0.0);
    }
    if t0 >= 1.0 {
        return Taylor::constant(1.0);
    }
    let a = phi(t);
    let b = phi(-t + 1.0);
    a / (a + b)
}

/// Step from 0 at `start` to 1 at `end` as a function of `x`.
pub fn step(x: Taylor, start: f64, end: f64) -> Taylor {
    let width = end - start;
    unit_step((x - start) * (1.0 / width))
}

/// Scalar value of [`step`].
pub fn step_value(x: f64, start: f64, end: f64) -> f64 {
    step(Taylor::constant(x), start, end).value()
}

/// Radial cutoff on the plane: 1 on the disk of radius `inner`, 0 outside the
/// disk of radius `outer`, smooth in between.
pub fn radial_cutoff(x: Jet2, y: Jet2, inner: f64, outer: f64) -> Jet2 {
    let rho2 = x * x + y * y;
    if rho2.v <= inner * inner {
        return Jet2::constant(1.0);
    }
    if rho2.v >= outer * outer {
        return Jet2::constant(0.0);
    }
    let rho = rho2.sqrt();
    let s = step(Taylor::variable(rho.v), inner, outer);
    rho.compose(&(-s + 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ends_are_exact() {
        assert_eq!(step_value(-0.5, 0.0, 1.0), 0.0);
        assert_eq!(step_value(0.0, 0.0, 1.0), 0.0);
        assert_eq!(step_value(1.0, 0.0, 1.0), 1.0);
        assert_eq!(step_value(3.0, 0.0, 1.0), 1.0);
        assert!((step_value(0.5, 0.0, 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn step_is_monotone_and_symmetric() {
        let mut prev = 0.0;
        for i in 0..=1000 {
            let t = i as f64 / 1000.0;
            let s = step_value(t, 0.0, 1.0);
            assert!(s >= prev);
            assert!((s + step_value(1.0 - t, 0.0, 1.0) - 1.0).abs() < 1e-14);
            prev = s;
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        for &x in &[0.31, 0.5, 0.77, 0.95] {
            let d = step(Taylor::variable(x), 0.3, 1.0).derivative(1);
            let h = 1e-6;
            let fd = (step_value(x + h, 0.3, 1.0) - step_value(x - h, 0.3, 1.0)) / (2.0 * h);
            assert!((d - fd).abs() < 1e-8, "{x}: {d} vs {fd}");
        }
    }

    #[test]
    fn cutoff_values() {
        let (x, y) = Jet2::coordinates(0.1, 0.1);
        assert_eq!(radial_cutoff(x, y, 0.3, 1.0).v, 1.0);
        let (x, y) = Jet2::coordinates(0.8, 0.7);
        assert_eq!(radial_cutoff(x, y, 0.3, 1.0).v, 0.0);
        let (x, y) = Jet2::coordinates(0.5, 0.2);
        let c = radial_cutoff(x, y, 0.3, 1.0);
        assert!(c.v > 0.0 && c.v < 1.0);
        assert!(c.g[0] < 0.0);
    }
}

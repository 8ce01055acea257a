use serde::{Deserialize, Serialize};

use crate::ham2d::integrate::{point_of, Stepper};
use crate::ham2d::section::first_exit;
use crate::ham2d::{DynamicsError, HamiltonianSpec, IntegratorConfig, Mat2, Point2, Result};
use crate::smooth::step_value;

/// Largest `|delta|` for which every critical point of the monkey-saddle
/// model stays in `B_{R/2}` and none appear in the cutoff annulus.
///
/// On the annulus `|grad Re(z^k)/k| >= (R/2)^(k-1)`, while the cutoff linear
/// term has gradient at most `5 |delta|` (the step has slope at most 2 over
/// a width of `R/2`).
pub fn monkey_delta_bound(k: u32, cutoff_radius: f64) -> f64 {
    0.2 * (0.5 * cutoff_radius).powi(k as i32 - 1)
}

/// `Re(z^k)/k + delta chi(|z|) x` with `chi = 1` on `B_{R/2}`, supported in
/// `B_R`. `delta = 0` gives the unperturbed degenerate saddle.
pub fn monkey_saddle_spec(k: u32, delta: f64, cutoff_radius: f64) -> Result<HamiltonianSpec> {
    let spec = HamiltonianSpec::MonkeySaddle {
        k,
        delta,
        cutoff_radius,
    };
    spec.validate()?;
    let bound = monkey_delta_bound(k, cutoff_radius);
    if delta.abs() >= bound {
        return Err(DynamicsError::Parameter(format!(
            "delta = {delta} is too large for k = {k}, R = {cutoff_radius}: critical points may \
             leave B_(R/2); use |delta| < {bound:.6e}"
        )));
    }
    Ok(spec)
}

/// Critical points of the monkey-saddle model: the roots of
/// `z^(k-1) = -delta`, the zeros of `d/dz (z^k/k + delta z)`.
pub fn monkey_saddle_roots(k: u32, delta: f64) -> Vec<Point2> {
    if delta == 0.0 {
        return vec![Point2::ORIGIN];
    }
    let n = k - 1;
    let r = delta.abs().powf(1.0 / n as f64);
    let base = if delta > 0.0 {
        std::f64::consts::PI
    } else {
        0.0
    };
    (0..n)
        .map(|m| Point2::polar(r, (base + 2.0 * std::f64::consts::PI * m as f64) / n as f64))
        .collect()
}

/// Lift of `base` to the `d`-fold branched cover `(r, theta) -> (r, d theta)`.
/// `d` must be a positive multiple of 1/2; half-integers need a base that is
/// symmetric under `p -> -p`.
pub fn branched_cover_lift(base: &HamiltonianSpec, degree: f64) -> Result<HamiltonianSpec> {
    base.validate()?;
    if degree == 1.0 {
        return Ok(base.clone());
    }
    let lifted = HamiltonianSpec::CoverLift {
        base: Box::new(base.clone()),
        degree,
    };
    lifted.validate()?;
    Ok(lifted)
}

/// Covering projection `(r, theta) -> (r, d theta)`.
pub fn cover_projection(p: Point2, degree: f64) -> Point2 {
    Point2::polar(p.norm(), degree * p.angle())
}

/// Number of sign changes of `H - level` around the circle of the given
/// radius; for a saddle-type critical point at the centre this counts the
/// stable and unstable separatrix rays together.
pub fn count_separatrix_rays(
    spec: &HamiltonianSpec,
    level: f64,
    radius: f64,
    samples: usize,
) -> Result<usize> {
    let n = samples.max(8);
    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        // Offset by half a cell so that no sample lands on an axis.
        let t = 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / n as f64;
        values.push(spec.value(Point2::polar(radius, t))? - level);
    }
    Ok((0..n)
        .filter(|&i| (values[i] < 0.0) != (values[(i + 1) % n] < 0.0))
        .count())
}

/// Twist by `angle` on the inner disk of a blowup, where the Hamiltonian is
/// radial. The twist is a rigid rotation for `|p| <= 0.5 inner eps`, the
/// identity for `|p| >= inner eps`, and preserves both area and `H`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PostRotation {
    pub angle: f64,
    pub rigid_radius: f64,
    pub outer_radius: f64,
}

impl PostRotation {
    pub fn for_blowup(spec: &HamiltonianSpec, angle: f64) -> Result<Self> {
        let HamiltonianSpec::Blowup(p) = spec else {
            return Err(DynamicsError::Parameter(
                "post-rotation is defined for blowup specs only".into(),
            ));
        };
        spec.validate()?;
        let s = p.effective_rotation_sign() as f64;
        if (p.amplitude * s - 1.0).abs() > 1e-12 {
            return Err(DynamicsError::Parameter(format!(
                "the Hamiltonian is radial on the inner disk only for A = rotation sign \
                 (A = {}, sign = {s})",
                p.amplitude
            )));
        }
        let outer = p.bump.inner * p.eps;
        Ok(Self {
            angle,
            rigid_radius: 0.5 * outer,
            outer_radius: outer,
        })
    }

    fn profile(&self, rho: f64) -> (f64, f64) {
        let c = 1.0 - step_value(rho, self.rigid_radius, self.outer_radius);
        let h = 1e-7 * self.outer_radius;
        let dc = if rho <= self.rigid_radius || rho >= self.outer_radius {
            0.0
        } else {
            let up = 1.0 - step_value(rho + h, self.rigid_radius, self.outer_radius);
            let dn = 1.0 - step_value(rho - h, self.rigid_radius, self.outer_radius);
            (up - dn) / (2.0 * h)
        };
        (c, dc)
    }

    pub fn apply(&self, p: Point2) -> Point2 {
        let (c, _) = self.profile(p.norm());
        let q = Mat2::rotation(self.angle * c).apply(p.to_array());
        Point2::new(q[0], q[1])
    }

    /// Derivative of [`PostRotation::apply`].
    pub fn jacobian(&self, p: Point2) -> Mat2 {
        let rho = p.norm();
        let (c, dc) = self.profile(rho);
        let r = Mat2::rotation(self.angle * c);
        if dc == 0.0 || rho == 0.0 {
            return r;
        }
        // d/dp [R(phi(p)) p] = R + (J R p) grad(phi)^T, grad(phi) = angle c' p/rho.
        let rp = r.apply(p.to_array());
        let jrp = [-rp[1], rp[0]];
        let k = self.angle * dc / rho;
        Mat2::new(
            r.0[0][0] + jrp[0] * k * p.x,
            r.0[0][1] + jrp[0] * k * p.y,
            r.0[1][0] + jrp[1] * k * p.x,
            r.0[1][1] + jrp[1] * k * p.y,
        )
    }
}

fn passage(
    spec: &HamiltonianSpec,
    entry: Point2,
    radius: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<Point2>> {
    let exit = first_exit(spec, entry, radius, 1.0, 1.0, Some(1e-3), cfg)?;
    let mut st = Stepper::new(spec, cfg, entry, 1.0, true)?;
    while st.t < exit.time {
        st.step(exit.time)?;
    }
    let mut pts: Vec<Point2> = st.samples.iter().map(|s| s.point).collect();
    pts.push(point_of(&st.y));
    Ok(pts)
}

fn point_to_polyline(p: Point2, line: &[Point2]) -> f64 {
    line.windows(2)
        .map(|w| {
            let ab = w[1] - w[0];
            let l2 = ab.norm_sq();
            let t = if l2 == 0.0 {
                0.0
            } else {
                ((p - w[0]).dot(ab) / l2).clamp(0.0, 1.0)
            };
            p.dist(w[0] + ab * t)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Hausdorff distance between two polylines, measured from their vertices.
pub fn hausdorff_distance(a: &[Point2], b: &[Point2]) -> f64 {
    let one = |u: &[Point2], v: &[Point2]| {
        u.iter()
            .map(|&p| point_to_polyline(p, v))
            .fold(0.0, f64::max)
    };
    one(a, b).max(one(b, a))
}

/// Hausdorff distance between the passages through `B_radius` of `spec` and of
/// the quadratic saddle, both started at `entry`.
pub fn shadowing_distance(
    spec: &HamiltonianSpec,
    entry: Point2,
    radius: f64,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    let a = passage(spec, entry, radius, cfg)?;
    let b = passage(&HamiltonianSpec::QuadSaddle, entry, radius, cfg)?;
    Ok(hausdorff_distance(&a, &b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blowup::{find_fixed_points, FixedPointType, SearchBox};
    use crate::ham2d::flow;

    #[test]
    fn monkey_roots_match_census() {
        for (k, n) in [(3, 2), (4, 3), (5, 4)] {
            let spec = monkey_saddle_spec(k, 0.01, 1.0).unwrap();
            let c = find_fixed_points(&spec, SearchBox::centered(0.6), 41).unwrap();
            assert_eq!(c.count(FixedPointType::Hyperbolic), n, "k = {k}");
            assert_eq!(c.points.len(), n);
            for r in monkey_saddle_roots(k, 0.01) {
                assert!(c.points.iter().any(|p| p.location.dist(r) < 1e-8));
            }
        }
    }

    #[test]
    fn large_delta_is_refused_with_a_bound() {
        let err = monkey_saddle_spec(3, 0.1, 1.0).unwrap_err().to_string();
        assert!(err.contains("5.000000e-2"), "{err}");
    }

    #[test]
    fn identity_cover() {
        let base = HamiltonianSpec::blowup(1.0, 0.1);
        assert_eq!(branched_cover_lift(&base, 1.0).unwrap(), base);
    }

    #[test]
    fn double_cover_semiconjugacy() {
        let lift = branched_cover_lift(&HamiltonianSpec::QuadSaddle, 2.0).unwrap();
        let cfg = IntegratorConfig::default();
        for i in 0..10 {
            let p = Point2::polar(0.3 + 0.05 * i as f64, 0.37 * i as f64 + 0.1);
            let t = 0.1 + 0.08 * i as f64;
            let up = cover_projection(flow(&lift, p, t, &cfg).unwrap(), 2.0);
            let down = flow(
                &HamiltonianSpec::QuadSaddle,
                cover_projection(p, 2.0),
                t,
                &cfg,
            )
            .unwrap();
            assert!(up.dist(down) < 1e-8, "{i}: {}", up.dist(down));
        }
    }

    #[test]
    fn three_halves_cover_has_six_rays() {
        let lift = branched_cover_lift(&HamiltonianSpec::QuadSaddle, 1.5).unwrap();
        assert_eq!(count_separatrix_rays(&lift, 0.0, 0.01, 720).unwrap(), 6);
        assert_eq!(
            count_separatrix_rays(&HamiltonianSpec::QuadSaddle, 0.0, 0.01, 720).unwrap(),
            4
        );
    }

    #[test]
    fn half_integer_cover_needs_symmetry() {
        let base = monkey_saddle_spec(3, 0.01, 1.0).unwrap();
        let out = branched_cover_lift(&base, 1.5);
        assert!(matches!(out, Err(DynamicsError::Symmetry(_))), "{out:?}");
    }

    #[test]
    fn post_rotation_preserves_energy_and_area() {
        let spec = HamiltonianSpec::blowup(1.0, 0.1);
        let rot = PostRotation::for_blowup(&spec, 0.7).unwrap();
        for i in 0..40 {
            let p = Point2::polar(0.001 * i as f64, 0.3 * i as f64);
            let q = rot.apply(p);
            assert!((spec.value(q).unwrap() - spec.value(p).unwrap()).abs() < 1e-15);
            assert!((rot.jacobian(p).det() - 1.0).abs() < 1e-6);
        }
        assert!(PostRotation::for_blowup(&HamiltonianSpec::blowup(2.0, 0.1), 0.7).is_err());
    }

    #[test]
    fn blowup_passages_shadow_the_saddle() {
        let eps = 0.01;
        let spec = HamiltonianSpec::blowup(1.0, eps);
        let cfg = IntegratorConfig::default();
        for phi in [-0.3, -0.7, -0.78, -0.785, 2.4] {
            let d = shadowing_distance(&spec, Point2::polar(1.0, phi), 1.0, &cfg).unwrap();
            assert!(d < 10.0 * eps, "{phi}: {d}");
        }
    }
}

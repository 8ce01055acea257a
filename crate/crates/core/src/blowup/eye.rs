use serde::{Deserialize, Serialize};

use super::fixed::{find_fixed_points, FixedPointType, SearchBox};
use crate::ham2d::integrate::{point_of, Stepper};
use crate::ham2d::{DynamicsError, HamiltonianSpec, IntegratorConfig, Point2, Result};

/// The region bounded by the saddle connections between the two hyperbolic
/// zeros of a blowup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EyeRegion {
    /// Closed polyline; the last vertex connects back to the first.
    pub polyline: Vec<Point2>,
    pub hyperbolic: [Point2; 2],
    pub elliptic: Vec<Point2>,
    /// Distance from the end of each traced branch to the saddle it reaches.
    pub closure_gap: f64,
    pub tolerance: f64,
}

impl EyeRegion {
    /// Winding number of the polyline around `p`.
    pub fn winding_number(&self, p: Point2) -> i32 {
        let v = &self.polyline;
        let mut wn = 0;
        for i in 0..v.len() {
            let a = v[i];
            let b = v[(i + 1) % v.len()];
            let cross = (b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y);
            if a.y <= p.y {
                if b.y > p.y && cross > 0.0 {
                    wn += 1;
                }
            } else if b.y <= p.y && cross < 0.0 {
                wn -= 1;
            }
        }
        wn
    }

    pub fn contains(&self, p: Point2) -> bool {
        self.winding_number(p) != 0
    }

    /// Distance from `p` to the polyline.
    pub fn distance_to_boundary(&self, p: Point2) -> f64 {
        let v = &self.polyline;
        let mut best = f64::INFINITY;
        for i in 0..v.len() {
            let a = v[i];
            let b = v[(i + 1) % v.len()];
            let ab = b - a;
            let len2 = ab.norm_sq();
            let t = if len2 == 0.0 {
                0.0
            } else {
                ((p - a).dot(ab) / len2).clamp(0.0, 1.0)
            };
            best = best.min(p.dist(a + ab * t));
        }
        best
    }

    /// Shoelace area.
    pub fn area(&self) -> f64 {
        let v = &self.polyline;
        let mut s = 0.0;
        for i in 0..v.len() {
            let a = v[i];
            let b = v[(i + 1) % v.len()];
            s += a.x * b.y - b.x * a.y;
        }
        0.5 * s.abs()
    }
}

/// Unstable eigenvector of `DX` at a hyperbolic zero with eigenvalue `lambda`.
fn unstable_direction(spec: &HamiltonianSpec, p: Point2, lambda: f64) -> Result<Point2> {
    let (_, dx) = spec.field_and_derivative(p)?;
    let m = dx.0;
    let c1 = Point2::new(m[0][1], lambda - m[0][0]);
    let c2 = Point2::new(lambda - m[1][1], m[1][0]);
    let v = if c1.norm() >= c2.norm() { c1 } else { c2 };
    Ok(v * (1.0 / v.norm()))
}

struct Branch {
    points: Vec<Point2>,
    gap: f64,
}

/// Follow an unstable branch until it comes within `stop` of `target`, leaves
/// the disk of radius `escape`, or runs out of time.
fn follow(
    spec: &HamiltonianSpec,
    start: Point2,
    target: Point2,
    stop: f64,
    escape: f64,
    cfg: &IntegratorConfig,
) -> Result<Option<Branch>> {
    let mut st = Stepper::new(spec, cfg, start, 1.0, true)?;
    loop {
        if st.t >= cfg.max_time {
            return Ok(None);
        }
        st.step(cfg.max_time)?;
        let p = point_of(&st.y);
        if p.norm() > escape {
            return Ok(None);
        }
        let gap = p.dist(target);
        if gap < stop {
            return Ok(Some(Branch {
                points: st.samples.iter().map(|s| s.point).collect(),
                gap,
            }));
        }
    }
}

/// Trace the eye of a spec with exactly two hyperbolic zeros.
pub fn eye_boundary(spec: &HamiltonianSpec, cfg: &IntegratorConfig) -> Result<EyeRegion> {
    spec.validate()?;
    let scale = spec.length_scale();
    let support = spec.support_radius().max(scale);
    let census = find_fixed_points(spec, SearchBox::centered(1.5 * support), 61)?;
    let hyp = census.of_type(FixedPointType::Hyperbolic);
    if hyp.len() != 2 {
        return Err(DynamicsError::Parameter(format!(
            "an eye needs exactly two hyperbolic zeros, found {}",
            hyp.len()
        )));
    }
    let elliptic = census
        .of_type(FixedPointType::Elliptic)
        .iter()
        .map(|f| f.location)
        .collect();
    let seed = 1e-8 * scale;
    let stop = 1e-5 * scale;
    let escape = 3.0 * support;
    let mut legs = Vec::new();
    for (from, to) in [(hyp[0], hyp[1]), (hyp[1], hyp[0])] {
        let u = unstable_direction(spec, from.location, from.eigenvalues[0].0)?;
        let mut found = None;
        for sign in [1.0, -1.0] {
            let start = from.location + u * (sign * seed);
            if let Some(b) = follow(spec, start, to.location, stop, escape, cfg)? {
                found = Some(b);
                break;
            }
        }
        match found {
            Some(b) => legs.push(b),
            None => {
                return Err(DynamicsError::NoReturn {
                    start: from.location,
                    elapsed: cfg.max_time,
                    last: to.location,
                })
            }
        }
    }
    let mut polyline = vec![hyp[0].location];
    polyline.extend(legs[0].points.iter().copied());
    polyline.push(hyp[1].location);
    polyline.extend(legs[1].points.iter().copied());
    Ok(EyeRegion {
        polyline,
        hyperbolic: [hyp[0].location, hyp[1].location],
        elliptic,
        closure_gap: legs[0].gap.max(legs[1].gap),
        tolerance: stop,
    })
}

pub const EYE_CSV_HEADER: [&str; 2] = ["x", "y"];

pub fn write_eye_csv<W: std::io::Write>(eye: &EyeRegion, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(EYE_CSV_HEADER)?;
    for p in eye.polyline.iter().chain(eye.polyline.first()) {
        w.write_record([format!("{:e}", p.x), format!("{:e}", p.y)])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eye_contains_elliptic_point() {
        let eps = 0.1;
        let spec = HamiltonianSpec::blowup(1.0, eps);
        let eye = eye_boundary(&spec, &IntegratorConfig::default()).unwrap();
        assert_eq!(eye.elliptic.len(), 1);
        assert!(eye.contains(eye.elliptic[0]));
        assert!(!eye.contains(Point2::new(2.0 * eps, 0.0)));
        assert!(eye.closure_gap < eye.tolerance);
        for p in &eye.polyline {
            assert!(p.norm() < eps);
        }
        assert!(eye.distance_to_boundary(eye.hyperbolic[0]) == 0.0);
    }

    #[test]
    fn eye_area_scales_quadratically() {
        let cfg = IntegratorConfig::default();
        let a1 = eye_boundary(&HamiltonianSpec::blowup(1.0, 0.1), &cfg)
            .unwrap()
            .area();
        let a2 = eye_boundary(&HamiltonianSpec::blowup(1.0, 0.2), &cfg)
            .unwrap()
            .area();
        assert!((a2 / a1 - 4.0).abs() < 1e-4, "{}", a2 / a1);
    }

    #[test]
    fn quadratic_saddle_has_no_eye() {
        let out = eye_boundary(&HamiltonianSpec::QuadSaddle, &IntegratorConfig::default());
        assert!(matches!(out, Err(DynamicsError::Parameter(_))));
    }
}

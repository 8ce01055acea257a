use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::fixed::{find_fixed_points, SearchBox};
use crate::ham2d::{flow_with_jacobian, HamiltonianSpec, IntegratorConfig, Mat2, Point2, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrbitType {
    Elliptic,
    PositiveHyperbolic,
    NegativeHyperbolic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitClass {
    #[serde(rename = "type")]
    pub kind: OrbitType,
    pub lefschetz: i8,
    /// 1 for odd, 0 for even.
    pub parity: u8,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error("return map has determinant {0}, not 1")]
    NotAreaPreserving(f64),
    #[error("degenerate return map: trace {0} is within 1e-9 of +-2")]
    Degenerate(f64),
}

pub fn classify_linear_return(m: &Mat2) -> std::result::Result<OrbitClass, ClassifyError> {
    let det = m.det();
    if !((det - 1.0).abs() <= 1e-6) {
        return Err(ClassifyError::NotAreaPreserving(det));
    }
    let tr = m.trace();
    if (tr.abs() - 2.0).abs() <= 1e-9 {
        return Err(ClassifyError::Degenerate(tr));
    }
    Ok(if tr > 2.0 {
        OrbitClass {
            kind: OrbitType::PositiveHyperbolic,
            lefschetz: -1,
            parity: 1,
        }
    } else if tr < -2.0 {
        OrbitClass {
            kind: OrbitType::NegativeHyperbolic,
            lefschetz: 1,
            parity: 0,
        }
    } else {
        OrbitClass {
            kind: OrbitType::Elliptic,
            lefschetz: 1,
            parity: 0,
        }
    })
}

/// The suspension flow `(p, theta) -> (f_t(p), theta + t)` on the plane times
/// the circle `R / 2 pi Z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suspension {
    pub spec: HamiltonianSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedOrbit {
    pub point: Point2,
    pub multiplicity: u32,
    pub period: f64,
    pub return_map: Mat2,
    pub trace: f64,
    /// `None` when the return map is degenerate.
    pub class: Option<OrbitClass>,
}

pub fn suspend(spec: &HamiltonianSpec) -> Result<Suspension> {
    spec.validate()?;
    Ok(Suspension { spec: spec.clone() })
}

impl Suspension {
    pub fn flow(
        &self,
        p: Point2,
        theta: f64,
        t: f64,
        cfg: &IntegratorConfig,
    ) -> Result<(Point2, f64)> {
        let q = crate::ham2d::flow(&self.spec, p, t, cfg)?;
        Ok((q, (theta + t).rem_euclid(std::f64::consts::TAU)))
    }

    /// Closed orbits of period `2 pi m`, `m <= max_multiple`, through zeros of
    /// the planar field in the box of half-width `radius`. Closed orbits coming
    /// from periodic planar orbits are not searched for.
    pub fn closed_orbits(
        &self,
        radius: f64,
        max_multiple: u32,
        cfg: &IntegratorConfig,
    ) -> Result<Vec<ClosedOrbit>> {
        let census = find_fixed_points(&self.spec, SearchBox::centered(radius), 41)?;
        let mut out = Vec::new();
        for fp in &census.points {
            for m in 1..=max_multiple {
                let period = std::f64::consts::TAU * m as f64;
                let mut c = *cfg;
                c.max_time = c.max_time.max(period);
                let f = flow_with_jacobian(&self.spec, fp.location, period, &c)?;
                let class = classify_linear_return(&f.jacobian).ok();
                out.push(ClosedOrbit {
                    point: fp.location,
                    multiplicity: m,
                    period,
                    return_map: f.jacobian,
                    trace: f.jacobian.trace(),
                    class,
                });
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ham2d::{BlowupParams, BumpParams};

    #[test]
    fn trace_criterion() {
        let c = classify_linear_return(&Mat2::new(2.0, 1.0, 1.0, 1.0)).unwrap();
        assert_eq!(
            (c.kind, c.lefschetz, c.parity),
            (OrbitType::PositiveHyperbolic, -1, 1)
        );
        let c = classify_linear_return(&Mat2::rotation(1.0)).unwrap();
        assert_eq!((c.kind, c.lefschetz, c.parity), (OrbitType::Elliptic, 1, 0));
        let c = classify_linear_return(&Mat2::new(-2.0, -1.0, -1.0, -1.0)).unwrap();
        assert_eq!(
            (c.kind, c.lefschetz, c.parity),
            (OrbitType::NegativeHyperbolic, 1, 0)
        );
        assert!(matches!(
            classify_linear_return(&Mat2::IDENTITY),
            Err(ClassifyError::Degenerate(_))
        ));
        assert!(matches!(
            classify_linear_return(&Mat2::diag(2.0, 1.0)),
            Err(ClassifyError::NotAreaPreserving(_))
        ));
    }

    #[test]
    fn quad_suspension_has_one_positive_hyperbolic_orbit() {
        let s = suspend(&HamiltonianSpec::QuadSaddle).unwrap();
        let orbits = s
            .closed_orbits(1.0, 1, &IntegratorConfig::default())
            .unwrap();
        assert_eq!(orbits.len(), 1);
        let o = &orbits[0];
        let expected = 2.0 * (std::f64::consts::TAU).cosh();
        assert!((o.trace - expected).abs() < 1e-6 * expected);
        assert_eq!(o.class.unwrap().kind, OrbitType::PositiveHyperbolic);
    }

    #[test]
    fn elliptic_orbit_through_the_centre() {
        let params = BlowupParams::new(1.0, 0.1).with_bump(BumpParams::new(1.1, 0.2));
        let s = suspend(&HamiltonianSpec::Blowup(params)).unwrap();
        let cfg = IntegratorConfig::default();
        let orbits = s.closed_orbits(0.2, 1, &cfg).unwrap();
        let centre = orbits.iter().find(|o| o.point.norm() < 1e-12).unwrap();
        assert_eq!(centre.class.unwrap().kind, OrbitType::Elliptic);
        for theta in [0.0, 1.0, 4.0] {
            let (q, th) = s.flow(centre.point, theta, 2.5, &cfg).unwrap();
            assert!(q.norm() < 1e-14);
            assert!((th - (theta + 2.5) % std::f64::consts::TAU).abs() < 1e-12);
        }
    }

    #[test]
    fn default_bump_centre_is_degenerate() {
        let s = suspend(&HamiltonianSpec::blowup(1.0, 0.1)).unwrap();
        let orbits = s
            .closed_orbits(0.2, 1, &IntegratorConfig::default())
            .unwrap();
        let centre = orbits.iter().find(|o| o.point.norm() < 1e-12).unwrap();
        assert!((centre.trace - 2.0).abs() < 1e-6, "{}", centre.trace);
    }
}

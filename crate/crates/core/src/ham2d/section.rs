//! First-return maps to a circle about the origin.

use serde::{Deserialize, Serialize};

use super::integrate::{dopri_step, jacobian_of, point_of, State, Stepper};
use super::{DynamicsError, HamiltonianSpec, IntegratorConfig, Mat2, Point2, Result};

/// Direction in which the flow crosses the circle at the start point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossingDirection {
    Inward,
    Outward,
}

impl CrossingDirection {
    fn sign(self) -> f64 {
        match self {
            CrossingDirection::Inward => 1.0,
            CrossingDirection::Outward => -1.0,
        }
    }
}

/// The circle `|p| = radius`; `entry` is the direction of the starting
/// crossing, and the map returns at the first crossing the other way.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionSpec {
    pub radius: f64,
    pub entry: CrossingDirection,
}

impl SectionSpec {
    pub fn entering(radius: f64) -> Self {
        Self {
            radius,
            entry: CrossingDirection::Inward,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(DynamicsError::Parameter(format!(
                "section radius must be positive, got {}",
                self.radius
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnOutcome {
    pub entry: Point2,
    pub exit: Point2,
    pub time: f64,
    /// Derivative of the fixed-time flow `f_T` at the entry point, `T` being
    /// the return time. Cone computations use this matrix.
    pub jacobian: Mat2,
    /// Derivative of the full return map `p -> f_{T(p)}(p)`, i.e. the flow
    /// derivative followed by projection along the field onto the circle.
    pub section_jacobian: Mat2,
    pub energy_drift: f64,
    pub steps: usize,
}

/// Where a trajectory first leaves the disk of the given radius.
pub(crate) struct Exit {
    pub point: Point2,
    pub time: f64,
    pub jacobian: Mat2,
    pub steps: usize,
}

fn level(y: &State, r2: f64, orient: f64) -> f64 {
    orient * (y[0] * y[0] + y[1] * y[1] - r2)
}

/// Integrate in direction `time_dir` until `orient * (|p|^2 - r^2)` changes
/// from negative to non-negative. The start must either already be on the
/// negative side or move into it.
pub(crate) fn first_exit(
    spec: &HamiltonianSpec,
    p0: Point2,
    radius: f64,
    orient: f64,
    time_dir: f64,
    initial_step: Option<f64>,
    cfg: &IntegratorConfig,
) -> Result<Exit> {
    let r2 = radius * radius;
    let mut st = Stepper::new(spec, cfg, p0, time_dir, false)?;
    if let Some(h) = initial_step {
        st = st.with_initial_step(h);
    }
    let mut armed = level(&st.y, r2, orient) < 0.0;
    loop {
        if st.t.abs() >= cfg.max_time {
            return Err(DynamicsError::NoReturn {
                start: p0,
                elapsed: st.t.abs(),
                last: point_of(&st.y),
            });
        }
        let acc = st.step(cfg.max_time)?;
        let g0 = level(&acc.y0, r2, orient);
        let g1 = level(&st.y, r2, orient);
        if armed && g0 < 0.0 && g1 >= 0.0 {
            let (tau, y) = refine(spec, &acc.y0, acc.h, g0, g1, r2, orient)?;
            let point = point_of(&y);
            let (field, _) = spec.field_and_derivative(point)?;
            let radial = point.dot(field) / radius;
            if radial.abs() <= 1e-10 * field.norm().max(1e-300) {
                return Err(DynamicsError::TangentialCrossing {
                    point,
                    t: acc.t0 + tau,
                });
            }
            return Ok(Exit {
                point,
                time: (acc.t0 + tau).abs(),
                jacobian: jacobian_of(&y),
                steps: st.steps,
            });
        }
        if g1 < 0.0 {
            armed = true;
        }
    }
}

/// Illinois refinement of the crossing inside one accepted step, evaluating
/// intermediate states by a fresh step of the same scheme from the step start.
fn refine(
    spec: &HamiltonianSpec,
    y0: &State,
    h: f64,
    g0: f64,
    g1: f64,
    r2: f64,
    orient: f64,
) -> Result<(f64, State)> {
    let (mut a, mut fa) = (0.0, g0);
    let (mut b, mut fb) = (h, g1);
    let mut yb = dopri_step(spec, y0, h)?.0;
    if fb == 0.0 {
        return Ok((b, yb));
    }
    let mut side = 0i8;
    for _ in 0..200 {
        let c = (a * fb - b * fa) / (fb - fa);
        let yc = dopri_step(spec, y0, c)?.0;
        let fc = level(&yc, r2, orient);
        if fc == 0.0 || (b - a).abs() <= 1e-16 * h.abs().max(1e-300) {
            return Ok((c, yc));
        }
        if fc < 0.0 {
            a = c;
            fa = fc;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = c;
            fb = fc;
            yb = yc;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
        if fc.abs() <= 1e-16 * r2 {
            return Ok((c, yc));
        }
    }
    Ok((b, yb))
}

/// First return of the flow from `start` on the section circle.
pub fn return_map(
    spec: &HamiltonianSpec,
    section: &SectionSpec,
    start: Point2,
    cfg: &IntegratorConfig,
) -> Result<ReturnOutcome> {
    section.validate()?;
    cfg.validate()?;
    let r = section.radius;
    if (start.norm() - r).abs() > 1e-9 * r {
        return Err(DynamicsError::BadStart(format!(
            "start ({}, {}) is not on the circle of radius {r}",
            start.x, start.y
        )));
    }
    let (field, _) = spec.field_and_derivative(start)?;
    let orient = section.entry.sign();
    let inward_speed = -orient * start.dot(field) / r;
    if !(inward_speed > 1e-14 * field.norm()) {
        return Err(DynamicsError::BadStart(format!(
            "the flow at ({}, {}) does not cross the circle in the {:?} direction",
            start.x, start.y, section.entry
        )));
    }
    // A shallow entry leaves again after roughly the chord time; the first
    // step must not jump over the whole excursion.
    let chord_time = 2.0 * r * inward_speed / field.norm_sq();
    let exit = first_exit(spec, start, r, orient, 1.0, Some(0.1 * chord_time), cfg)?;
    let h0 = spec.value(start)?;
    let (x1, _) = spec.field_and_derivative(exit.point)?;
    // Projection along X onto the tangent line of the circle at the exit.
    let n = exit.point;
    let denom = n.dot(x1);
    let proj = Mat2::new(
        1.0 - x1.x * n.x / denom,
        -x1.x * n.y / denom,
        -x1.y * n.x / denom,
        1.0 - x1.y * n.y / denom,
    );
    Ok(ReturnOutcome {
        entry: start,
        exit: exit.point,
        time: exit.time,
        jacobian: exit.jacobian,
        section_jacobian: proj * exit.jacobian,
        energy_drift: (spec.value(exit.point)? - h0).abs(),
        steps: exit.steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quad_return_matches_closed_form() {
        let spec = HamiltonianSpec::QuadSaddle;
        let cfg = IntegratorConfig::default();
        let section = SectionSpec::entering(1.0);
        for &phi in &[-0.3, -0.7, -1.2, 2.0, 2.9] {
            let start = Point2::polar(1.0, phi);
            let out = return_map(&spec, &section, start, &cfg).unwrap();
            let t = (-(2.0 * phi).sin()).atanh();
            assert!((out.time - t).abs() < 1e-9, "{phi}: {} vs {t}", out.time);
            let m = Mat2::hyperbolic(t);
            let e = m.apply(start.to_array());
            assert!(out.exit.dist(Point2::new(e[0], e[1])) < 1e-9);
            assert!(out.jacobian.max_abs_diff(&m) < 1e-8);
            assert!((out.exit.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_passage_near_the_diagonal() {
        let spec = HamiltonianSpec::QuadSaddle;
        let start = Point2::polar(1.0, -std::f64::consts::FRAC_PI_4 + 0.01);
        let out = return_map(
            &spec,
            &SectionSpec::entering(1.0),
            start,
            &Default::default(),
        )
        .unwrap();
        let expected = Point2::polar(1.0, std::f64::consts::FRAC_PI_4 - 0.01);
        assert!(out.exit.dist(expected) < 1e-9);
    }

    #[test]
    fn shallow_entry_is_not_skipped() {
        let spec = HamiltonianSpec::QuadSaddle;
        let phi = -1e-4;
        let out = return_map(
            &spec,
            &SectionSpec::entering(1.0),
            Point2::polar(1.0, phi),
            &Default::default(),
        )
        .unwrap();
        let t = (-(2.0 * phi).sin()).atanh();
        assert!((out.time - t).abs() < 1e-12);
    }

    #[test]
    fn stable_separatrix_never_returns() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let out = return_map(
            &HamiltonianSpec::QuadSaddle,
            &SectionSpec::entering(1.0),
            Point2::new(s, -s),
            &IntegratorConfig::default(),
        );
        assert!(
            matches!(out, Err(DynamicsError::NoReturn { .. })),
            "{out:?}"
        );
    }

    #[test]
    fn rejects_outgoing_start() {
        let out = return_map(
            &HamiltonianSpec::QuadSaddle,
            &SectionSpec::entering(1.0),
            Point2::polar(1.0, 0.5),
            &IntegratorConfig::default(),
        );
        assert!(matches!(out, Err(DynamicsError::BadStart(_))));
        let off = return_map(
            &HamiltonianSpec::QuadSaddle,
            &SectionSpec::entering(1.0),
            Point2::new(0.5, -0.5),
            &IntegratorConfig::default(),
        );
        assert!(matches!(off, Err(DynamicsError::BadStart(_))));
    }

    #[test]
    fn section_jacobian_kills_the_field_direction() {
        let spec = HamiltonianSpec::QuadSaddle;
        let start = Point2::polar(1.0, -0.5);
        let out = return_map(
            &spec,
            &SectionSpec::entering(1.0),
            start,
            &Default::default(),
        )
        .unwrap();
        let x0 = spec.vector_field(start).unwrap();
        let v = out.section_jacobian.apply(x0.to_array());
        assert!(v[0].abs() < 1e-9 && v[1].abs() < 1e-9);
    }
}

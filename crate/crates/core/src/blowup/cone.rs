//! Quadrant cone fields and sampled contraction certificates for first-return
//! maps to a circle.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fixed::{find_fixed_points, FixedPointType, SearchBox};
use crate::ham2d::{
    return_map, DynamicsError, HamiltonianSpec, IntegratorConfig, Mat2, Point2, Result, SectionSpec,
};

/// A field of double cones, each given by two boundary directions `b1, b2`;
/// the cone is the open sector swept counterclockwise from `b1` to `b2`
/// together with its negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConeField {
    /// `{v_x v_y > 0}` everywhere.
    Quadrant,
    /// Pullback of the quadrant field under `(r, theta) -> (r, d theta)`.
    PolarLift { degree: f64 },
    /// Pullback of the quadrant field under `z -> z^d`.
    ConformalLift { degree: f64 },
}

impl ConeField {
    /// The field matched to the linear model of `spec` at infinity.
    pub fn for_spec(spec: &HamiltonianSpec) -> ConeField {
        match spec {
            HamiltonianSpec::QuadSaddle | HamiltonianSpec::Blowup(_) => ConeField::Quadrant,
            HamiltonianSpec::MonkeySaddle { k, .. } => ConeField::ConformalLift {
                degree: *k as f64 / 2.0,
            },
            HamiltonianSpec::CoverLift { base, degree } => match ConeField::for_spec(base) {
                ConeField::Quadrant => ConeField::PolarLift { degree: *degree },
                ConeField::PolarLift { degree: d } => ConeField::PolarLift { degree: d * degree },
                other => other,
            },
            HamiltonianSpec::Scaled { base, .. } => ConeField::for_spec(base),
        }
    }

    pub fn boundaries(&self, p: Point2) -> Result<[[f64; 2]; 2]> {
        match *self {
            ConeField::Quadrant => Ok([[1.0, 0.0], [0.0, 1.0]]),
            ConeField::PolarLift { degree } => {
                if p.norm_sq() == 0.0 {
                    return Err(DynamicsError::Domain {
                        x: p.x,
                        y: p.y,
                        reason: "lifted cone field is undefined at the branch point".into(),
                    });
                }
                let th = p.angle();
                let inv = Mat2::rotation(th)
                    * Mat2::diag(1.0, 1.0 / degree)
                    * Mat2::rotation(-degree * th);
                Ok([inv.column(0), inv.column(1)])
            }
            ConeField::ConformalLift { degree } => {
                if p.norm_sq() == 0.0 {
                    return Err(DynamicsError::Domain {
                        x: p.x,
                        y: p.y,
                        reason: "lifted cone field is undefined at the branch point".into(),
                    });
                }
                let rot = Mat2::rotation(-(degree - 1.0) * p.angle());
                Ok([rot.column(0), rot.column(1)])
            }
        }
    }

    /// Whether `v` lies in the open cone at `p`.
    pub fn contains(&self, p: Point2, v: [f64; 2]) -> Result<bool> {
        let [b1, b2] = self.boundaries(p)?;
        let a = axis_angle(v) - axis_angle(b1);
        let w = (axis_angle(b2) - axis_angle(b1)).rem_euclid(PI);
        let a = a.rem_euclid(PI);
        Ok(a > 0.0 && a < w)
    }
}

/// Angle of the line spanned by `v`, in `[0, pi)`.
pub fn axis_angle(v: [f64; 2]) -> f64 {
    v[1].atan2(v[0]).rem_euclid(PI)
}

/// Image of a source cone under `d`, measured against a target cone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeImage {
    /// Line angles of `d b1` and `d b2`, in `[0, pi)`.
    pub image_angles: [f64; 2],
    /// Angular distance from the image sector to the target boundary; positive
    /// iff the closed image lies in the open target cone.
    pub margin: f64,
}

pub fn cone_image(d: &Mat2, source: [[f64; 2]; 2], target: [[f64; 2]; 2]) -> ConeImage {
    let i1 = d.apply(source[0]);
    let i2 = d.apply(source[1]);
    let image_angles = [axis_angle(i1), axis_angle(i2)];
    let base = axis_angle(target[0]);
    let width = (axis_angle(target[1]) - base).rem_euclid(PI);
    let a1 = (image_angles[0] - base).rem_euclid(PI);
    // Signed sweep from d b1 to d b2. cross(d b1, d b2) = det(d) cross(b1, b2);
    // the left side keeps its sign when d is badly conditioned and the two
    // image directions agree to rounding.
    let cross = source[0][0] * source[1][1] - source[0][1] * source[1][0];
    let dot = i1[0] * i2[0] + i1[1] * i2[1];
    let span = (d.det() * cross).atan2(dot);
    let (lo, hi) = if span >= 0.0 {
        (a1, a1 + span)
    } else {
        (a1 + span, a1)
    };
    let margin = if lo >= 0.0 { lo.min(width - hi) } else { lo };
    ConeImage {
        image_angles,
        margin,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleKind {
    Uniform,
    /// Entry at a signed angular offset from a stable separatrix.
    Separatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeSample {
    pub index: usize,
    pub kind: SampleKind,
    pub entry: Point2,
    pub entry_angle: f64,
    /// Signed offset from the nearest stable separatrix entry angle
    /// (separatrix samples only).
    pub offset: Option<f64>,
    pub exit: Option<Point2>,
    pub return_time: Option<f64>,
    pub jacobian: Option<Mat2>,
    pub image_angles: Option<[f64; 2]>,
    pub margin: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateConfig {
    pub radius: f64,
    pub samples: usize,
    /// Angular half-width excluded around each linear-model stable direction.
    #[serde(default = "CertificateConfig::default_exclusion")]
    pub exclusion: f64,
    /// Angular offsets, on both sides, from each traced stable separatrix.
    /// These resolve trajectories that pass through the bump, which uniform
    /// sampling outside the exclusion zones cannot reach.
    #[serde(default = "CertificateConfig::default_offsets")]
    pub separatrix_offsets: Vec<f64>,
    #[serde(default)]
    pub integrator: IntegratorConfig,
}

impl CertificateConfig {
    fn default_exclusion() -> f64 {
        1e-4
    }

    fn default_offsets() -> Vec<f64> {
        vec![1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10, 1e-11]
    }

    pub fn new(radius: f64, samples: usize) -> Self {
        Self {
            radius,
            samples,
            exclusion: Self::default_exclusion(),
            separatrix_offsets: Self::default_offsets(),
            integrator: IntegratorConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "pass")]
    Pass,
    #[serde(rename = "fail")]
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(&self) -> bool {
        matches!(self, Verdict::Pass)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateParameters {
    pub amplitude: Option<f64>,
    pub eps: f64,
    /// Radius of the perturbation support.
    pub inner_radius: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeCertificate {
    pub spec: HamiltonianSpec,
    pub parameters: CertificateParameters,
    pub cone_field: ConeField,
    pub exclusion: f64,
    pub sample_count: usize,
    pub separatrix_entries: Vec<Point2>,
    pub samples: Vec<ConeSample>,
    pub min_margin: f64,
    pub min_margin_index: Option<usize>,
    pub all_returned: bool,
    pub first_failure: Option<usize>,
    pub flags: Vec<String>,
    pub verdict: Verdict,
}

/// Arcs of the circle where the linear model flows inward, as `(start, end)`
/// angles, together with the stable direction in the middle of each.
fn inflow_arcs(prongs: f64) -> Vec<(f64, f64, f64)> {
    let k = prongs;
    let n = k.round() as usize;
    (0..n)
        .map(|m| {
            let start = PI * (2 * m + 1) as f64 / k;
            let end = PI * (2 * m + 2) as f64 / k;
            let stable = 0.5 * (start + end);
            (start, end, stable)
        })
        .collect()
}

/// Linear-model stable directions, as angles.
pub fn stable_directions(prongs: f64) -> Vec<f64> {
    inflow_arcs(prongs).into_iter().map(|a| a.2).collect()
}

fn uniform_angles(prongs: f64, n: usize, exclusion: f64) -> Vec<f64> {
    // Each inflow arc minus the excluded middle is two intervals.
    let mut pieces = Vec::new();
    for (s, e, m) in inflow_arcs(prongs) {
        pieces.push((s, m - exclusion));
        pieces.push((m + exclusion, e));
    }
    let total: f64 = pieces.iter().map(|(a, b)| b - a).sum();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut u = (i as f64 + 0.5) / n as f64 * total;
        for &(a, b) in &pieces {
            if u <= b - a {
                out.push(a + u);
                break;
            }
            u -= b - a;
        }
    }
    out
}

/// Entry points on the circle of radius `radius` of the stable separatrices
/// of every hyperbolic zero inside the perturbation, found by flowing
/// backward from the linearized stable direction.
pub fn stable_separatrix_entries(
    spec: &HamiltonianSpec,
    radius: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<Point2>> {
    let scale = spec.length_scale().min(radius);
    let half = spec.support_radius().max(0.5 * scale);
    let census = find_fixed_points(spec, SearchBox::centered(half), 41)?;
    let mut entries = Vec::new();
    for fp in census.of_type(FixedPointType::Hyperbolic) {
        let (_, dx) = spec.field_and_derivative(fp.location)?;
        let lambda = fp.eigenvalues[0].0;
        let m = dx.0;
        // Kernel of DX + lambda I.
        let c1 = [m[0][1], -(m[0][0] + lambda)];
        let c2 = [-(m[1][1] + lambda), m[1][0]];
        let v = if c1[0].hypot(c1[1]) >= c2[0].hypot(c2[1]) {
            c1
        } else {
            c2
        };
        let nv = v[0].hypot(v[1]);
        // Weak saddles take a long time to leave in backward time; the seed
        // distance keeps the linearization error far below the offsets used.
        let mut back = *cfg;
        back.max_time = cfg.max_time.max(50.0 / lambda);
        for sign in [1.0, -1.0] {
            let delta = 1e-8 * scale * sign / nv;
            let p0 = Point2::new(fp.location.x + delta * v[0], fp.location.y + delta * v[1]);
            if let Ok(exit) =
                crate::ham2d::section::first_exit(spec, p0, radius, 1.0, -1.0, None, &back)
            {
                entries.push(exit.point);
            }
        }
    }
    entries.sort_by(|a, b| a.angle().total_cmp(&b.angle()));
    // Backward branches from both ends of a saddle connection reach the
    // same entry point.
    entries.dedup_by(|a, b| a.dist(*b) < 1e-9 * radius);
    Ok(entries)
}

#[allow(clippy::too_many_arguments)]
fn evaluate(
    spec: &HamiltonianSpec,
    field: &ConeField,
    section: &SectionSpec,
    cfg: &IntegratorConfig,
    index: usize,
    kind: SampleKind,
    angle: f64,
    offset: Option<f64>,
) -> ConeSample {
    let entry = Point2::polar(section.radius, angle);
    let mut s = ConeSample {
        index,
        kind,
        entry,
        entry_angle: angle,
        offset,
        exit: None,
        return_time: None,
        jacobian: None,
        image_angles: None,
        margin: None,
        error: None,
    };
    let outcome = return_map(spec, section, entry, cfg).and_then(|r| {
        let img = cone_image(
            &r.jacobian,
            field.boundaries(entry)?,
            field.boundaries(r.exit)?,
        );
        Ok((r, img))
    });
    match outcome {
        Ok((r, img)) => {
            s.exit = Some(r.exit);
            s.return_time = Some(r.time);
            s.jacobian = Some(r.jacobian);
            s.image_angles = Some(img.image_angles);
            s.margin = Some(img.margin);
        }
        Err(e) => s.error = Some(e.to_string()),
    }
    s
}

/// Sample the first-return map to the circle of radius `cfg.radius` and
/// record how strictly its derivative maps the cone field into itself.
pub fn certify_cone_contraction(
    spec: &HamiltonianSpec,
    cfg: &CertificateConfig,
) -> Result<ConeCertificate> {
    spec.validate()?;
    cfg.integrator.validate()?;
    let r = cfg.radius;
    let support = spec.support_radius();
    if !(r > support) {
        return Err(DynamicsError::Parameter(format!(
            "certificate radius {r} must exceed the perturbation radius {support}"
        )));
    }
    let prongs = spec.prongs();
    if (prongs - prongs.round()).abs() > 1e-12 || prongs < 2.0 {
        return Err(DynamicsError::Parameter(format!(
            "cone certificates need an integer prong count >= 2, got {prongs}"
        )));
    }
    if cfg.samples == 0 {
        return Err(DynamicsError::Parameter(
            "certificate needs samples > 0".into(),
        ));
    }
    let mut flags = Vec::new();
    let eps = spec.length_scale();
    if matches!(spec, HamiltonianSpec::Blowup(_)) && eps >= 0.1 * r {
        flags.push(format!("eps = {eps} is not below 0.1 R = {}", 0.1 * r));
    }
    let field = ConeField::for_spec(spec);
    let section = SectionSpec::entering(r);

    let mut jobs: Vec<(SampleKind, f64, Option<f64>)> =
        uniform_angles(prongs, cfg.samples, cfg.exclusion)
            .into_iter()
            .map(|a| (SampleKind::Uniform, a, None))
            .collect();
    let separatrix_entries = if cfg.separatrix_offsets.is_empty() {
        Vec::new()
    } else {
        stable_separatrix_entries(spec, r, &cfg.integrator)?
    };
    for e in &separatrix_entries {
        for &o in &cfg.separatrix_offsets {
            for sign in [-1.0, 1.0] {
                jobs.push((SampleKind::Separatrix, e.angle() + sign * o, Some(sign * o)));
            }
        }
    }

    let samples: Vec<ConeSample> = jobs
        .par_iter()
        .enumerate()
        .map(|(i, &(kind, angle, offset))| {
            evaluate(
                spec,
                &field,
                &section,
                &cfg.integrator,
                i,
                kind,
                angle,
                offset,
            )
        })
        .collect();

    let mut min_margin = f64::INFINITY;
    let mut min_margin_index = None;
    let mut first_failure = None;
    for s in &samples {
        match s.margin {
            Some(m) => {
                if m < min_margin {
                    min_margin = m;
                    min_margin_index = Some(s.index);
                }
                if !(m > 0.0) && first_failure.is_none() {
                    first_failure = Some(s.index);
                }
            }
            None => {
                if first_failure.is_none() {
                    first_failure = Some(s.index);
                }
            }
        }
    }
    let all_returned = samples.iter().all(|s| s.margin.is_some());
    let verdict = Verdict::from_bool(all_returned && min_margin > 0.0);
    Ok(ConeCertificate {
        spec: spec.clone(),
        parameters: CertificateParameters {
            amplitude: match spec {
                HamiltonianSpec::Blowup(p) => Some(p.amplitude),
                _ => None,
            },
            eps,
            inner_radius: support,
            radius: r,
        },
        cone_field: field,
        exclusion: cfg.exclusion,
        sample_count: samples.len(),
        separatrix_entries,
        samples,
        min_margin,
        min_margin_index,
        all_returned,
        first_failure,
        flags,
        verdict,
    })
}

/// Largest discrepancy between archived margins and margins recomputed from
/// a fresh fixed-time flow Jacobian over the archived return time.
pub fn reverify_certificate(cert: &ConeCertificate, cfg: &IntegratorConfig) -> Result<f64> {
    let field = cert.cone_field;
    let worst = cert
        .samples
        .par_iter()
        .filter_map(|s| match (s.margin, s.return_time, s.exit) {
            (Some(m), Some(t), Some(exit)) => Some((s, m, t, exit)),
            _ => None,
        })
        .map(|(s, m, t, exit)| -> Result<f64> {
            let d = crate::ham2d::flow_jacobian(&cert.spec, s.entry, t, cfg)?;
            let img = cone_image(&d, field.boundaries(s.entry)?, field.boundaries(exit)?);
            Ok((img.margin - m).abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(worst.into_iter().fold(0.0, f64::max))
}

/// Largest discrepancy between archived margins and margins recomputed from
/// the archived Jacobians alone, with no integration. A certificate read
/// back from disk can be checked this way without trusting the integrator.
pub fn recheck_archived_margins(cert: &ConeCertificate) -> Result<f64> {
    let field = cert.cone_field;
    let mut worst: f64 = 0.0;
    for s in &cert.samples {
        if let (Some(m), Some(d), Some(exit)) = (s.margin, s.jacobian, s.exit) {
            let img = cone_image(&d, field.boundaries(s.entry)?, field.boundaries(exit)?);
            worst = worst.max((img.margin - m).abs());
        }
    }
    Ok(worst)
}

pub const CERTIFICATE_CSV_HEADER: [&str; 14] = [
    "index",
    "kind",
    "entry_x",
    "entry_y",
    "offset",
    "exit_x",
    "exit_y",
    "return_time",
    "J11",
    "J12",
    "J21",
    "J22",
    "margin",
    "error",
];

pub fn write_certificate_csv<W: std::io::Write>(cert: &ConeCertificate, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CERTIFICATE_CSV_HEADER)?;
    let f = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
    for s in &cert.samples {
        let j = s.jacobian.map(|m| m.0);
        w.write_record([
            s.index.to_string(),
            match s.kind {
                SampleKind::Uniform => "uniform".into(),
                SampleKind::Separatrix => "separatrix".into(),
            },
            format!("{:e}", s.entry.x),
            format!("{:e}", s.entry.y),
            f(s.offset),
            f(s.exit.map(|p| p.x)),
            f(s.exit.map(|p| p.y)),
            f(s.return_time),
            f(j.map(|m| m[0][0])),
            f(j.map(|m| m[0][1])),
            f(j.map(|m| m[1][0])),
            f(j.map(|m| m[1][1])),
            f(s.margin),
            s.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hyperbolic_image_of_quadrant() {
        for &t in &[0.01, 0.5, 3.0] {
            let img = cone_image(
                &Mat2::hyperbolic(t),
                [[1.0, 0.0], [0.0, 1.0]],
                [[1.0, 0.0], [0.0, 1.0]],
            );
            let expected = t.tanh().atan();
            assert!((img.margin - expected).abs() < 1e-14);
            assert!((img.image_angles[0] - expected).abs() < 1e-14);
        }
        let back = cone_image(
            &Mat2::hyperbolic(-0.3),
            [[1.0, 0.0], [0.0, 1.0]],
            [[1.0, 0.0], [0.0, 1.0]],
        );
        assert!(back.margin < 0.0);
        let id = cone_image(
            &Mat2::IDENTITY,
            [[1.0, 0.0], [0.0, 1.0]],
            [[1.0, 0.0], [0.0, 1.0]],
        );
        assert_eq!(id.margin, 0.0);
    }

    #[test]
    fn rotation_leaves_the_cone() {
        let img = cone_image(
            &Mat2::rotation(1.0),
            [[1.0, 0.0], [0.0, 1.0]],
            [[1.0, 0.0], [0.0, 1.0]],
        );
        assert!(img.margin < 0.0);
    }

    #[test]
    fn quadrant_membership() {
        let q = ConeField::Quadrant;
        assert!(q.contains(Point2::ORIGIN, [1.0, 2.0]).unwrap());
        assert!(q.contains(Point2::ORIGIN, [-1.0, -2.0]).unwrap());
        assert!(!q.contains(Point2::ORIGIN, [1.0, -2.0]).unwrap());
    }

    #[test]
    fn lifted_fields_reduce_to_quadrant_at_degree_one() {
        let p = Point2::polar(0.7, 2.2);
        for f in [
            ConeField::PolarLift { degree: 1.0 },
            ConeField::ConformalLift { degree: 1.0 },
        ] {
            let b = f.boundaries(p).unwrap();
            assert!((b[0][0] - 1.0).abs() < 1e-14 && b[0][1].abs() < 1e-14);
            assert!(b[1][0].abs() < 1e-14 && (b[1][1] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn uniform_angles_avoid_stable_directions() {
        let angles = uniform_angles(2.0, 1000, 1e-4);
        assert_eq!(angles.len(), 1000);
        for a in angles {
            assert!((2.0 * a).sin() < 0.0);
            for s in stable_directions(2.0) {
                assert!((a - s).abs() >= 1e-4);
            }
        }
    }

    #[test]
    fn quad_certificate_passes() {
        let mut cfg = CertificateConfig::new(1.0, 100);
        cfg.separatrix_offsets.clear();
        let cert = certify_cone_contraction(&HamiltonianSpec::QuadSaddle, &cfg).unwrap();
        assert!(cert.verdict.passed());
        assert!(cert.min_margin > 0.0);
        for s in &cert.samples {
            let phi = s.entry_angle;
            let t = (-(2.0 * phi).sin()).atanh();
            assert!((s.margin.unwrap() - t.tanh().atan()).abs() < 1e-8);
        }
    }

    #[test]
    fn quad_separatrix_entries_are_the_diagonals() {
        let e = stable_separatrix_entries(
            &HamiltonianSpec::QuadSaddle,
            1.0,
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert_eq!(e.len(), 2);
        let mut angles: Vec<f64> = e.iter().map(|p| p.angle()).collect();
        angles.sort_by(f64::total_cmp);
        assert!((angles[0] + PI / 4.0).abs() < 1e-12);
        assert!((angles[1] - 3.0 * PI / 4.0).abs() < 1e-12);
    }
}

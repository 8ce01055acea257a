//! The cone field extended from the entry circle into `B_R`, outside the eye.
//!
//! A point `p` inside `B_R` is reached from the entry circle at `p0 = f_{-s}(p)`.
//! Its cone is `Df_s(p0) K(s)`, where `K(s)` is the entry cone with each
//! boundary turned outward by `beta(s) = (pi/4)(1 - exp(-rate s))`. Since
//! `K(s)` grows with `s`, transport along the flow maps each cone into the
//! interior of the next; at the exit the transported cone must land inside
//! the entry cone field again, which bounds the usable rate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cone::{cone_image, ConeCertificate, ConeField, Verdict};
use super::eye::{eye_boundary, EyeRegion};
use crate::ham2d::section::first_exit;
use crate::ham2d::{
    flow_with_jacobian, DynamicsError, HamiltonianSpec, IntegratorConfig, Mat2, Point2, Result,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedConeField {
    pub spec: HamiltonianSpec,
    pub base: ConeField,
    pub radius: f64,
    pub widening_rate: f64,
    pub eye: Option<EyeRegion>,
    pub integrator: IntegratorConfig,
}

/// Where a query point was traced back to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transport {
    pub entry: Point2,
    pub time: f64,
    /// `Df_s` at the entry point.
    pub jacobian: Mat2,
}

fn turn(v: [f64; 2], angle: f64) -> [f64; 2] {
    Mat2::rotation(angle).apply(v)
}

impl ExtendedConeField {
    pub fn widening(&self, s: f64) -> f64 {
        std::f64::consts::FRAC_PI_4 * (1.0 - (-self.widening_rate * s).exp())
    }

    /// Trace `p` back to the entry circle; `None` outside `B_R`.
    pub fn transport(&self, p: Point2) -> Result<Option<Transport>> {
        if p.norm() >= self.radius {
            return Ok(None);
        }
        if let Some(eye) = &self.eye {
            if eye.contains(p) || eye.distance_to_boundary(p) <= eye.tolerance {
                return Err(DynamicsError::Domain {
                    x: p.x,
                    y: p.y,
                    reason: "the extended cone field is not defined on the eye".into(),
                });
            }
        }
        let back = first_exit(
            &self.spec,
            p,
            self.radius,
            1.0,
            -1.0,
            None,
            &self.integrator,
        )?;
        let jacobian = back
            .jacobian
            .inverse()
            .ok_or_else(|| DynamicsError::Parameter("singular backward flow derivative".into()))?;
        Ok(Some(Transport {
            entry: back.point,
            time: back.time,
            jacobian,
        }))
    }

    /// Cone boundaries at `p`.
    pub fn cone_at(&self, p: Point2) -> Result<[[f64; 2]; 2]> {
        match self.transport(p)? {
            None => self.base.boundaries(p),
            Some(t) => {
                let [b1, b2] = self.base.boundaries(t.entry)?;
                let w = self.widening(t.time);
                Ok([
                    t.jacobian.apply(turn(b1, -w)),
                    t.jacobian.apply(turn(b2, w)),
                ])
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtendedConfig {
    pub widening_rate: f64,
    pub seed: u64,
    /// Uniform random points of `B_R` outside the eye.
    #[serde(default = "ExtendedConfig::default_interior")]
    pub interior_samples: usize,
    /// Random points outside `B_R`, where the field must equal the base field.
    #[serde(default = "ExtendedConfig::default_outside")]
    pub outside_samples: usize,
    /// Angular offsets from traced stable separatrix entries; each gives a
    /// trajectory through the bump, sampled at several times.
    #[serde(default = "ExtendedConfig::default_transit")]
    pub transit_offsets: Vec<f64>,
    /// Flow time between a point and its forward image in the interior check.
    #[serde(default = "ExtendedConfig::default_step")]
    pub step_time: f64,
    #[serde(default)]
    pub integrator: IntegratorConfig,
}

impl ExtendedConfig {
    fn default_interior() -> usize {
        200
    }

    fn default_outside() -> usize {
        100
    }

    fn default_transit() -> Vec<f64> {
        vec![1e-2, 1e-3, 1e-4]
    }

    fn default_step() -> f64 {
        0.5
    }

    pub fn new(widening_rate: f64, seed: u64) -> Self {
        Self {
            widening_rate,
            seed,
            interior_samples: Self::default_interior(),
            outside_samples: Self::default_outside(),
            transit_offsets: Self::default_transit(),
            step_time: Self::default_step(),
            integrator: IntegratorConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtendedSampleKind {
    Outside,
    Interior,
    Transit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedSample {
    pub index: usize,
    pub kind: ExtendedSampleKind,
    pub point: Point2,
    /// Flow time back to the entry circle.
    pub age: Option<f64>,
    /// Margin of `Df_{step}` from the cone at the point into the cone at its
    /// image, when the image is still inside `B_R`.
    pub step_margin: Option<f64>,
    /// Margin of the flow to the exit from the cone at the point into the
    /// base cone at the exit.
    pub exit_margin: Option<f64>,
    pub error: Option<String>,
}

impl ExtendedSample {
    fn margin(&self) -> Option<f64> {
        match self.kind {
            ExtendedSampleKind::Outside => self.error.is_none().then_some(f64::INFINITY),
            _ => match (self.exit_margin, self.step_margin) {
                (Some(e), Some(s)) => Some(e.min(s)),
                (Some(e), None) => Some(e),
                _ => None,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedReport {
    pub widening_rate: f64,
    pub radius: f64,
    pub samples: Vec<ExtendedSample>,
    pub min_exit_margin: f64,
    pub min_step_margin: f64,
    pub first_failure: Option<usize>,
    pub verdict: Verdict,
}

fn check_point(
    field: &ExtendedConeField,
    index: usize,
    kind: ExtendedSampleKind,
    p: Point2,
    step_time: f64,
) -> ExtendedSample {
    let mut s = ExtendedSample {
        index,
        kind,
        point: p,
        age: None,
        step_margin: None,
        exit_margin: None,
        error: None,
    };
    if kind == ExtendedSampleKind::Outside {
        match field
            .cone_at(p)
            .and_then(|c| Ok((c, field.base.boundaries(p)?)))
        {
            Ok((c, b)) if c == b => {}
            Ok(_) => s.error = Some("cone differs from the base field outside B_R".into()),
            Err(e) => s.error = Some(e.to_string()),
        }
        return s;
    }
    let run = || -> Result<(Option<f64>, Option<f64>, f64)> {
        let t = field
            .transport(p)?
            .ok_or_else(|| DynamicsError::BadStart("interior sample lies outside B_R".into()))?;
        let cone = field.cone_at(p)?;
        let exit = first_exit(
            &field.spec,
            p,
            field.radius,
            1.0,
            1.0,
            None,
            &field.integrator,
        )?;
        let exit_margin =
            cone_image(&exit.jacobian, cone, field.base.boundaries(exit.point)?).margin;
        let step_margin = if exit.time > step_time {
            let f = flow_with_jacobian(&field.spec, p, step_time, &field.integrator)?;
            Some(cone_image(&f.jacobian, cone, field.cone_at(f.point)?).margin)
        } else {
            None
        };
        Ok((Some(exit_margin), step_margin, t.time))
    };
    match run() {
        Ok((e, st, age)) => {
            s.exit_margin = e;
            s.step_margin = st;
            s.age = Some(age);
        }
        Err(e) => s.error = Some(e.to_string()),
    }
    s
}

/// Build the extended field over a passed certificate and verify strict
/// contraction on random and bump-transiting sample points.
pub fn extended_cone_field(
    cert: &ConeCertificate,
    cfg: &ExtendedConfig,
) -> Result<(ExtendedConeField, ExtendedReport)> {
    if !cert.verdict.passed() {
        return Err(DynamicsError::Parameter(
            "the cone field extends only over a passed certificate".into(),
        ));
    }
    if !(cfg.widening_rate > 0.0 && cfg.widening_rate.is_finite() && cfg.step_time > 0.0) {
        return Err(DynamicsError::Parameter(
            "widening rate and step time must be positive".into(),
        ));
    }
    let spec = &cert.spec;
    let eye = match spec {
        HamiltonianSpec::Blowup(_) => eye_boundary(spec, &cfg.integrator).ok(),
        _ => None,
    };
    let r = cert.parameters.radius;
    let field = ExtendedConeField {
        spec: spec.clone(),
        base: cert.cone_field,
        radius: r,
        widening_rate: cfg.widening_rate,
        eye,
        integrator: cfg.integrator,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut jobs = Vec::new();
    for _ in 0..cfg.outside_samples {
        let rho = r * (1.0 + 2.0 * rng.random::<f64>());
        let th = std::f64::consts::TAU * rng.random::<f64>();
        jobs.push((ExtendedSampleKind::Outside, Point2::polar(rho, th)));
    }
    let mut interior = 0;
    while interior < cfg.interior_samples {
        let rho = r * rng.random::<f64>().sqrt();
        let th = std::f64::consts::TAU * rng.random::<f64>();
        let p = Point2::polar(rho, th);
        if let Some(eye) = &field.eye {
            if eye.contains(p) || eye.distance_to_boundary(p) <= eye.tolerance {
                continue;
            }
        }
        jobs.push((ExtendedSampleKind::Interior, p));
        interior += 1;
    }
    for e in &cert.separatrix_entries {
        for &o in &cfg.transit_offsets {
            for sign in [-1.0, 1.0] {
                let entry = Point2::polar(r, e.angle() + sign * o);
                let Ok(exit) = first_exit(spec, entry, r, 1.0, 1.0, Some(1e-3), &cfg.integrator)
                else {
                    continue;
                };
                for frac in [0.25, 0.5, 0.75] {
                    let f = crate::ham2d::flow(spec, entry, frac * exit.time, &cfg.integrator)?;
                    jobs.push((ExtendedSampleKind::Transit, f));
                }
            }
        }
    }

    let samples: Vec<ExtendedSample> = jobs
        .par_iter()
        .enumerate()
        .map(|(i, &(kind, p))| check_point(&field, i, kind, p, cfg.step_time))
        .collect();

    let fold = |f: fn(&ExtendedSample) -> Option<f64>| {
        samples.iter().filter_map(f).fold(f64::INFINITY, f64::min)
    };
    let min_exit_margin = fold(|s| s.exit_margin);
    let min_step_margin = fold(|s| s.step_margin);
    let first_failure = samples
        .iter()
        .find(|s| !matches!(s.margin(), Some(m) if m > 0.0))
        .map(|s| s.index);
    let report = ExtendedReport {
        widening_rate: cfg.widening_rate,
        radius: r,
        min_exit_margin,
        min_step_margin,
        verdict: Verdict::from_bool(first_failure.is_none()),
        first_failure,
        samples,
    };
    Ok((field, report))
}

use serde::{Deserialize, Serialize};

use super::{DynamicsError, Mat2, Point2, Result};
use crate::jet::Jet2;
use crate::smooth::radial_cutoff;

/// Parameters of the bump `beta` used by the blowup family.
///
/// With cutoff `chi` (1 on the disk of radius `inner`, 0 outside `outer`) and
/// rotation sign `s`, the bump is
///
/// ```text
/// beta(u, v) = chi(rho) (a - b rho^2) - s chi(rho) (u^2 - v^2) / 2
/// ```
///
/// so that on the inner disk the blowup Hamiltonian at amplitude `A = s`
/// reduces to `s eps^2 (a - b rho^2)`, a pure rotation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpParams {
    pub a: f64,
    pub b: f64,
    #[serde(default = "BumpParams::default_inner")]
    pub inner: f64,
    #[serde(default = "BumpParams::default_outer")]
    pub outer: f64,
}

impl BumpParams {
    fn default_inner() -> f64 {
        0.3
    }

    fn default_outer() -> f64 {
        1.0
    }

    pub fn new(a: f64, b: f64) -> Self {
        Self {
            a,
            b,
            inner: Self::default_inner(),
            outer: Self::default_outer(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.b > 0.0) {
            return Err(DynamicsError::Parameter(format!(
                "bump constants must be positive (a = {}, b = {})",
                self.a, self.b
            )));
        }
        if !(self.inner > 0.0 && self.inner < self.outer && self.outer <= 1.0) {
            return Err(DynamicsError::Parameter(format!(
                "bump cutoff radii must satisfy 0 < inner < outer <= 1 (inner = {}, outer = {})",
                self.inner, self.outer
            )));
        }
        Ok(())
    }
}

impl Default for BumpParams {
    fn default() -> Self {
        Self::new(1.1, 1.0)
    }
}

/// A validated bump function in rescaled coordinates `(u, v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    params: BumpParams,
    rotation_sign: f64,
}

/// Build the bump `beta` for the given constants, cutoff radii and rotation
/// sign (`+1` or `-1`).
pub fn bump_profile(params: BumpParams, rotation_sign: i8) -> Result<Bump> {
    params.validate()?;
    if rotation_sign != 1 && rotation_sign != -1 {
        return Err(DynamicsError::Parameter(format!(
            "rotation sign must be +1 or -1, got {rotation_sign}"
        )));
    }
    Ok(Bump {
        params,
        rotation_sign: rotation_sign as f64,
    })
}

impl Bump {
    pub fn params(&self) -> &BumpParams {
        &self.params
    }

    pub fn jet(&self, u: Jet2, v: Jet2) -> Jet2 {
        let p = &self.params;
        let chi = radial_cutoff(u, v, p.inner, p.outer);
        if chi.is_constant() && chi.v == 0.0 {
            return Jet2::constant(0.0);
        }
        let rho2 = u * u + v * v;
        let radial = (rho2 * -p.b) + p.a;
        let saddle = (u * u - v * v) * 0.5;
        chi * (radial - saddle * self.rotation_sign)
    }

    pub fn value(&self, u: f64, v: f64) -> f64 {
        let (ju, jv) = Jet2::coordinates(u, v);
        self.jet(ju, jv).v
    }
}

/// Parameters of the blowup Hamiltonian
/// `H_A = (x^2 - y^2)/2 + A eps^2 beta(x/eps, y/eps)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlowupParams {
    #[serde(alias = "A")]
    pub amplitude: f64,
    pub eps: f64,
    /// Which inner rotation the bump produces at `A = rotation_sign`.
    /// Defaults to the sign of the amplitude.
    #[serde(default)]
    pub rotation_sign: Option<i8>,
    #[serde(default)]
    pub bump: BumpParams,
}

impl BlowupParams {
    pub fn new(amplitude: f64, eps: f64) -> Self {
        Self {
            amplitude,
            eps,
            rotation_sign: None,
            bump: BumpParams::default(),
        }
    }

    pub fn with_bump(mut self, bump: BumpParams) -> Self {
        self.bump = bump;
        self
    }

    pub fn effective_rotation_sign(&self) -> i8 {
        self.rotation_sign
            .unwrap_or(if self.amplitude < 0.0 { -1 } else { 1 })
    }

    fn bump(&self) -> Result<Bump> {
        bump_profile(self.bump, self.effective_rotation_sign())
    }
}

/// Which normalization of the quadratic saddle is in force.
///
/// `Half` is `(x^2 - y^2)/2`, whose linearized flow is exactly
/// `exp(t [[0,1],[1,0]])`. `Literal` uses `x^2 - y^2`, which doubles every
/// rate; it is realized by scaling the whole Hamiltonian by 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    #[default]
    Half,
    Literal,
}

impl Normalization {
    pub fn apply(self, spec: HamiltonianSpec) -> HamiltonianSpec {
        match self {
            Normalization::Half => spec,
            Normalization::Literal => HamiltonianSpec::Scaled {
                base: Box::new(spec),
                factor: 2.0,
            },
        }
    }
}

/// A planar Hamiltonian from the supported family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HamiltonianSpec {
    /// `(x^2 - y^2) / 2`.
    QuadSaddle,
    /// The blowup family `H_A`.
    Blowup(BlowupParams),
    /// `Re((x + iy)^k) / k + delta chi_R(rho) x` with `chi_R` equal to 1 on
    /// the disk of radius `R/2` and supported in the disk of radius `R`.
    MonkeySaddle {
        k: u32,
        delta: f64,
        cutoff_radius: f64,
    },
    /// Pullback of `base` under `(r, theta) -> (r, degree * theta)`, divided
    /// by `degree` so that the lifted flow covers the base flow.
    CoverLift {
        base: Box<HamiltonianSpec>,
        degree: f64,
    },
    /// `factor * base`.
    Scaled {
        base: Box<HamiltonianSpec>,
        factor: f64,
    },
}

const SYMMETRY_PROBES: usize = 64;

impl HamiltonianSpec {
    pub fn blowup(amplitude: f64, eps: f64) -> Self {
        HamiltonianSpec::Blowup(BlowupParams::new(amplitude, eps))
    }

    /// Check parameters; every constructor path funnels through here before
    /// any evaluation that could silently produce garbage.
    pub fn validate(&self) -> Result<()> {
        match self {
            HamiltonianSpec::QuadSaddle => Ok(()),
            HamiltonianSpec::Blowup(p) => {
                if !(p.eps > 0.0 && p.eps.is_finite()) {
                    return Err(DynamicsError::Parameter(format!(
                        "blowup radius eps must be positive, got {}",
                        p.eps
                    )));
                }
                if !p.amplitude.is_finite() {
                    return Err(DynamicsError::Parameter("amplitude must be finite".into()));
                }
                p.bump().map(|_| ())
            }
            HamiltonianSpec::MonkeySaddle {
                k,
                delta,
                cutoff_radius,
            } => {
                if *k < 3 {
                    return Err(DynamicsError::Parameter(format!(
                        "monkey saddle needs k >= 3, got {k}"
                    )));
                }
                if !(*cutoff_radius > 0.0) || !delta.is_finite() {
                    return Err(DynamicsError::Parameter(
                        "monkey saddle needs a positive cutoff radius and finite delta".into(),
                    ));
                }
                Ok(())
            }
            HamiltonianSpec::CoverLift { base, degree } => {
                base.validate()?;
                let twice = 2.0 * degree;
                if !(*degree > 0.0) || (twice - twice.round()).abs() > 1e-12 {
                    return Err(DynamicsError::Parameter(format!(
                        "cover degree must be a positive half-integer, got {degree}"
                    )));
                }
                let integral = (degree - degree.round()).abs() < 1e-12;
                if !integral && !base.is_z2_symmetric()? {
                    return Err(DynamicsError::Symmetry(format!(
                        "half-integer cover degree {degree} needs a base with H(-p) = H(p)"
                    )));
                }
                Ok(())
            }
            HamiltonianSpec::Scaled { base, factor } => {
                if !(factor.is_finite() && *factor != 0.0) {
                    return Err(DynamicsError::Parameter(format!(
                        "scale factor must be finite and nonzero, got {factor}"
                    )));
                }
                base.validate()
            }
        }
    }

    /// Sampled check of `H(-p) = H(p)` on a deterministic set of probe points.
    pub fn is_z2_symmetric(&self) -> Result<bool> {
        let scale = self.length_scale();
        for i in 0..SYMMETRY_PROBES {
            // Golden-angle spiral covering the disk of radius 2 * scale.
            let frac = (i as f64 + 0.5) / SYMMETRY_PROBES as f64;
            let p = Point2::polar(2.0 * scale * frac.sqrt(), i as f64 * 2.399_963_229_728_653);
            let a = self.value(p)?;
            let b = self.value(-p)?;
            if (a - b).abs() > 1e-12 * (1.0 + a.abs()) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Characteristic radius of the nonlinear region (1 for homogeneous models).
    pub fn length_scale(&self) -> f64 {
        match self {
            HamiltonianSpec::QuadSaddle => 1.0,
            HamiltonianSpec::Blowup(p) => p.eps,
            HamiltonianSpec::MonkeySaddle { cutoff_radius, .. } => *cutoff_radius,
            HamiltonianSpec::CoverLift { base, .. } | HamiltonianSpec::Scaled { base, .. } => {
                base.length_scale()
            }
        }
    }

    /// Number of prongs `k` of the linear model at infinity: stable rays sit
    /// at angles `(-pi/2 + 2 pi m) / k`.
    pub fn prongs(&self) -> f64 {
        match self {
            HamiltonianSpec::QuadSaddle | HamiltonianSpec::Blowup(_) => 2.0,
            HamiltonianSpec::MonkeySaddle { k, .. } => *k as f64,
            HamiltonianSpec::CoverLift { base, degree } => base.prongs() * degree,
            HamiltonianSpec::Scaled { base, .. } => base.prongs(),
        }
    }

    /// Radius outside which the Hamiltonian equals its homogeneous model.
    pub fn support_radius(&self) -> f64 {
        match self {
            HamiltonianSpec::QuadSaddle => 0.0,
            HamiltonianSpec::Blowup(p) => p.eps * p.bump.outer,
            HamiltonianSpec::MonkeySaddle { cutoff_radius, .. } => *cutoff_radius,
            HamiltonianSpec::CoverLift { base, .. } | HamiltonianSpec::Scaled { base, .. } => {
                base.support_radius()
            }
        }
    }

    /// Value, gradient and Hessian at `(x, y)`.
    pub fn jet(&self, x: f64, y: f64) -> Result<Jet2> {
        let (jx, jy) = Jet2::coordinates(x, y);
        self.jet_at(jx, jy)
    }

    fn jet_at(&self, x: Jet2, y: Jet2) -> Result<Jet2> {
        match self {
            HamiltonianSpec::QuadSaddle => Ok((x * x - y * y) * 0.5),
            HamiltonianSpec::Blowup(p) => {
                let quad = (x * x - y * y) * 0.5;
                let inv = 1.0 / p.eps;
                let beta = p.bump()?.jet(x * inv, y * inv);
                if beta.is_constant() && beta.v == 0.0 {
                    return Ok(quad);
                }
                Ok(quad + beta * (p.amplitude * p.eps * p.eps))
            }
            HamiltonianSpec::MonkeySaddle {
                k,
                delta,
                cutoff_radius,
            } => {
                // z^k by repeated complex multiplication on jets.
                let (mut re, mut im) = (x, y);
                for _ in 1..*k {
                    let nre = re * x - im * y;
                    let nim = re * y + im * x;
                    re = nre;
                    im = nim;
                }
                let mut h = re * (1.0 / *k as f64);
                if *delta != 0.0 {
                    let chi = radial_cutoff(x, y, 0.5 * cutoff_radius, *cutoff_radius);
                    if !(chi.is_constant() && chi.v == 0.0) {
                        h = h + chi * x * *delta;
                    }
                }
                Ok(h)
            }
            HamiltonianSpec::CoverLift { base, degree } => {
                let r2 = x * x + y * y;
                if r2.v == 0.0 {
                    return Err(DynamicsError::Domain {
                        x: x.v,
                        y: y.v,
                        reason: "a branched-cover lift is not evaluated at the branch point".into(),
                    });
                }
                let r = r2.sqrt();
                let theta = y.atan2(x) * *degree;
                let bx = r * theta.cos();
                let by = r * theta.sin();
                Ok(base.jet_at(bx, by)? * (1.0 / degree))
            }
            HamiltonianSpec::Scaled { base, factor } => Ok(base.jet_at(x, y)? * *factor),
        }
    }

    pub fn value(&self, p: Point2) -> Result<f64> {
        Ok(self.jet(p.x, p.y)?.v)
    }

    pub fn gradient(&self, p: Point2) -> Result<[f64; 2]> {
        Ok(self.jet(p.x, p.y)?.g)
    }

    pub fn hessian(&self, p: Point2) -> Result<Mat2> {
        Ok(Mat2(self.jet(p.x, p.y)?.h))
    }

    /// `X(p) = (-dH/dy, dH/dx)`.
    pub fn vector_field(&self, p: Point2) -> Result<Point2> {
        let g = self.gradient(p)?;
        Ok(Point2::new(-g[1], g[0]))
    }

    /// Field and its derivative `DX(p)`.
    pub fn field_and_derivative(&self, p: Point2) -> Result<(Point2, Mat2)> {
        let j = self.jet(p.x, p.y)?;
        let h = j.h;
        Ok((
            Point2::new(-j.g[1], j.g[0]),
            Mat2::new(-h[1][0], -h[1][1], h[0][0], h[0][1]),
        ))
    }
}

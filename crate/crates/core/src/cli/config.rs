use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::ham2d::HamiltonianSpec;
use crate::sftq::{OrbitTable, QMonomial, Suite, Word};
use crate::torus_shs::{AxiomTolerances, RadialFn};

/// One run: what to compute, where to write it, and how strictly to judge it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerances: ToleranceOverrides,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    BlowupCertify(CertifyParams),
    BlowupFixedPoints(FixedPointParams),
    BlowupEye(EyeParams),
    TorusBuild(TorusParams),
    TorusVerify(TorusParams),
    TorusGlue(GlueParams),
    SlopesScan(ScanParams),
    SlopesCheck(SlopeCheckParams),
    SftCheck(SftCheckParams),
    SftProduct(SftProblem),
}

impl Experiment {
    /// Stem used for output files.
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::BlowupCertify(_) => "blowup-certify",
            Experiment::BlowupFixedPoints(_) => "blowup-fixed-points",
            Experiment::BlowupEye(_) => "blowup-eye",
            Experiment::TorusBuild(_) => "torus-build",
            Experiment::TorusVerify(_) => "torus-verify",
            Experiment::TorusGlue(_) => "torus-glue",
            Experiment::SlopesScan(_) => "slopes-scan",
            Experiment::SlopesCheck(_) => "slopes-check",
            Experiment::SftCheck(_) => "sft-check",
            Experiment::SftProduct(_) => "sft-product",
        }
    }

    pub fn needs_seed(&self) -> bool {
        match self {
            Experiment::BlowupCertify(p) => p.widening_rate.is_some(),
            Experiment::SftCheck(_) => true,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    /// Largest margin drift allowed when a certificate is recomputed.
    #[serde(default)]
    pub reverify: Option<f64>,
    /// Newton residual ceiling for fixed points.
    #[serde(default)]
    pub newton: Option<f64>,
    /// Mismatch ceiling for gluing.
    #[serde(default)]
    pub glue: Option<f64>,
    #[serde(default)]
    pub axioms: Option<AxiomTolerances>,
}

fn default_amplitude() -> f64 {
    1.0
}

fn default_eps() -> f64 {
    0.01
}

fn default_radius() -> f64 {
    1.0
}

fn default_samples() -> usize {
    1000
}

/// `spec`, when present, replaces the blowup built from `amplitude` and `eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyParams {
    #[serde(default = "default_amplitude", alias = "A")]
    pub amplitude: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_radius", alias = "R")]
    pub radius: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub max_time: Option<f64>,
    /// Also extend the cone field into the disk at this widening rate.
    #[serde(default)]
    pub widening_rate: Option<f64>,
    #[serde(default)]
    pub spec: Option<HamiltonianSpec>,
}

impl CertifyParams {
    pub fn hamiltonian(&self) -> HamiltonianSpec {
        self.spec
            .clone()
            .unwrap_or_else(|| HamiltonianSpec::blowup(self.amplitude, self.eps))
    }
}

fn default_density() -> usize {
    61
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedPointParams {
    #[serde(default = "default_amplitude", alias = "A")]
    pub amplitude: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// Half width of the search box; defaults to 1.5 times the support radius.
    #[serde(default)]
    pub half_width: Option<f64>,
    #[serde(default = "default_density")]
    pub density: usize,
    #[serde(default)]
    pub spec: Option<HamiltonianSpec>,
}

impl FixedPointParams {
    pub fn hamiltonian(&self) -> HamiltonianSpec {
        self.spec
            .clone()
            .unwrap_or_else(|| HamiltonianSpec::blowup(self.amplitude, self.eps))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EyeParams {
    #[serde(default = "default_amplitude", alias = "A")]
    pub amplitude: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default)]
    pub spec: Option<HamiltonianSpec>,
}

impl EyeParams {
    pub fn hamiltonian(&self) -> HamiltonianSpec {
        self.spec
            .clone()
            .unwrap_or_else(|| HamiltonianSpec::blowup(self.amplitude, self.eps))
    }
}

fn default_r1() -> f64 {
    0.25
}

fn default_r2() -> f64 {
    0.5
}

fn default_radial() -> usize {
    100
}

fn default_angular() -> usize {
    10
}

fn default_profile_points() -> usize {
    201
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorusParams {
    pub p: i64,
    pub q: i64,
    /// Reeb slope profile.
    pub s: RadialFn,
    #[serde(default = "default_r1")]
    pub r1: f64,
    #[serde(default = "default_r2")]
    pub r2: f64,
    #[serde(default = "default_radial")]
    pub radial: usize,
    #[serde(default = "default_angular")]
    pub angular: usize,
    #[serde(default = "default_profile_points")]
    pub profile_points: usize,
}

fn default_glue_samples() -> usize {
    51
}

fn default_scale() -> f64 {
    1.0
}

/// Glue a structure to a copy of itself whose omega is multiplied by
/// `exterior_scale`; the recovered radial scaling should be its inverse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlueParams {
    pub p: i64,
    pub q: i64,
    pub s: RadialFn,
    #[serde(default = "default_scale")]
    pub exterior_scale: f64,
    #[serde(default = "default_glue_samples")]
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanParams {
    pub pmax: i64,
    pub qmax: i64,
    pub rmax: i64,
    /// Write every `(slope, degeneracy)` row, not just the per-q summary.
    #[serde(default)]
    pub rows_csv: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlopeCheckParams {
    pub p: i64,
    pub q: i64,
    /// Degeneracy slopes `r/1` to test against, besides `1/0`.
    #[serde(default)]
    pub r: Vec<i64>,
}

fn default_cases() -> usize {
    500
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SftCheckParams {
    pub suite: Suite,
    #[serde(default = "default_cases")]
    pub cases: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SftProblem {
    pub orbits: OrbitTable,
    pub h: Vec<Word>,
    pub monomials: Vec<QMonomial>,
    #[serde(default)]
    pub allow_even_terms: bool,
    /// Also report `d(d x)` for each monomial.
    #[serde(default)]
    pub d_squared: bool,
}

/// Parse a slope profile flag: `zero`, `one`, or comma-separated polynomial
/// coefficients such as `0.1,0,1`.
pub fn parse_profile(text: &str) -> Result<RadialFn, String> {
    match text.trim() {
        "zero" | "0" => Ok(RadialFn::constant(0.0)),
        "one" | "1" => Ok(RadialFn::one()),
        t => t
            .split(',')
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .map_err(|e| format!("bad coefficient `{c}`: {e}"))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(RadialFn::polynomial),
    }
}

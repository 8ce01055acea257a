use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::config::*;
use crate::blowup::{
    certify_cone_contraction, extended_cone_field, eye_boundary, find_fixed_points,
    recheck_archived_margins, reverify_certificate, write_certificate_csv, write_eye_csv,
    CertificateConfig, ExtendedConfig, FixedPointType, SearchBox,
};
use crate::ham2d::IntegratorConfig;
use crate::sftq::{run_suite, HPoly, QSum};
use crate::slopes::{in_V, scan_slopes, surgery_verdict, write_scan_csv, Slope};
use crate::torus_shs::{
    build_radial_profiles, glue_surgery, write_profile_csv, GridSpec, RadialFn, TorusSHS,
};

/// One pass/fail judgement inside a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

impl Check {
    fn new(name: &str, pass: bool) -> Self {
        Self {
            name: name.into(),
            pass,
            value: None,
            threshold: None,
        }
    }

    fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            pass: value <= threshold,
            value: Some(value),
            threshold: Some(threshold),
        }
    }

    fn above(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            pass: value > threshold,
            value: Some(value),
            threshold: Some(threshold),
        }
    }
}

/// Deterministic record of a run. Wall time and timestamps go to the
/// sidecar so identical configs give byte-identical reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub experiment: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub checks: Vec<Check>,
    pub result: Value,
    /// File names relative to the output directory.
    pub artifacts: Vec<String>,
    pub pass: bool,
}

/// Data-only plot description; rendering is left to external tools.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSpec {
    pub title: String,
    pub data: String,
    pub mark: String,
    pub x: String,
    pub y: String,
}

struct Outputs<'a> {
    dir: &'a Path,
    stem: &'a str,
    artifacts: Vec<String>,
    plots: Vec<PlotSpec>,
}

impl Outputs<'_> {
    fn file(&mut self, suffix: &str) -> anyhow::Result<BufWriter<File>> {
        let name = format!("{}.{suffix}", self.stem);
        let f = File::create(self.dir.join(&name)).with_context(|| format!("creating {name}"))?;
        self.artifacts.push(name);
        Ok(BufWriter::new(f))
    }

    fn plot(&mut self, title: &str, suffix: &str, mark: &str, x: &str, y: &str) {
        self.plots.push(PlotSpec {
            title: title.into(),
            data: format!("{}.{suffix}", self.stem),
            mark: mark.into(),
            x: x.into(),
            y: y.into(),
        });
    }
}

fn to_value<T: Serialize>(v: &T) -> anyhow::Result<Value> {
    Ok(serde_json::to_value(v)?)
}

/// Run `cfg`, writing the report, data files and plot spec into `dir` under
/// the file stem `stem`.
pub fn execute(cfg: &ExperimentConfig, dir: &Path, stem: &str) -> anyhow::Result<RunReport> {
    if cfg.experiment.needs_seed() && cfg.seed.is_none() {
        bail!(
            "`{}` is randomized; a seed is required",
            cfg.experiment.name()
        );
    }
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut out = Outputs {
        dir,
        stem,
        artifacts: Vec::new(),
        plots: Vec::new(),
    };
    let tol = &cfg.tolerances;
    let (checks, result) = match &cfg.experiment {
        Experiment::BlowupCertify(p) => certify(p, cfg.seed, tol, &mut out)?,
        Experiment::BlowupFixedPoints(p) => fixed_points(p, tol, &mut out)?,
        Experiment::BlowupEye(p) => eye(p, &mut out)?,
        Experiment::TorusBuild(p) => torus_build(p, &mut out)?,
        Experiment::TorusVerify(p) => torus_verify(p, tol, &mut out)?,
        Experiment::TorusGlue(p) => torus_glue(p, tol)?,
        Experiment::SlopesScan(p) => slopes_scan(p, &mut out)?,
        Experiment::SlopesCheck(p) => slopes_check(p)?,
        Experiment::SftCheck(p) => {
            let rep = run_suite(p.suite, cfg.seed.expect("checked above"), p.cases)?;
            let checks = vec![Check::new("suite", rep.pass)];
            (checks, to_value(&rep)?)
        }
        Experiment::SftProduct(p) => sft_product(p)?,
    };
    if !out.plots.is_empty() {
        let plots = std::mem::take(&mut out.plots);
        let w = out.file("plot.json")?;
        serde_json::to_writer_pretty(w, &plots)?;
    }
    let pass = checks.iter().all(|c| c.pass);
    let report = RunReport {
        experiment: cfg.experiment.name().into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: ExperimentConfig {
            output_dir: None,
            ..cfg.clone()
        },
        checks,
        result,
        artifacts: out.artifacts,
        pass,
    };
    let text = serde_json::to_string_pretty(&report)?;
    fs::write(dir.join(format!("{stem}.json")), text + "\n")?;
    Ok(report)
}

type Outcome = anyhow::Result<(Vec<Check>, Value)>;

fn certify(
    p: &CertifyParams,
    seed: Option<u64>,
    tol: &ToleranceOverrides,
    out: &mut Outputs,
) -> Outcome {
    let spec = p.hamiltonian();
    let mut cc = CertificateConfig::new(p.radius, p.samples);
    if let Some(t) = p.max_time {
        cc.integrator.max_time = t;
    }
    let cert = certify_cone_contraction(&spec, &cc)?;
    let drift = reverify_certificate(&cert, &cc.integrator)?;
    let archived = recheck_archived_margins(&cert)?;
    let limit = tol.reverify.unwrap_or(1e-6);
    let mut checks = vec![
        Check::new("verdict", cert.verdict.passed()),
        Check::above("min_margin", cert.min_margin, 0.0),
        Check::at_most("archived_jacobian_recheck", archived, limit),
        Check::at_most("reintegration_drift", drift, limit),
    ];
    write_certificate_csv(&cert, out.file("csv")?)?;
    out.plot(
        "cone margin by entry angle",
        "csv",
        "point",
        "entry_angle",
        "margin",
    );
    serde_json::to_writer(out.file("certificate.json")?, &cert)?;
    let mut result = json!({
        "parameters": cert.parameters,
        "cone_field": cert.cone_field,
        "samples": cert.samples.len(),
        "min_margin": cert.min_margin,
        "min_margin_index": cert.min_margin_index,
        "all_returned": cert.all_returned,
        "first_failure": cert.first_failure,
        "flags": cert.flags,
        "archived_jacobian_recheck": archived,
        "reintegration_drift": drift,
    });
    if let (Some(rate), Some(seed)) = (p.widening_rate, seed) {
        if cert.verdict.passed() {
            let (_, rep) = extended_cone_field(&cert, &ExtendedConfig::new(rate, seed))?;
            checks.push(Check::new("extended_verdict", rep.verdict.passed()));
            result["extended"] = json!({
                "widening_rate": rep.widening_rate,
                "samples": rep.samples.len(),
                "min_exit_margin": rep.min_exit_margin,
                "min_step_margin": rep.min_step_margin,
                "first_failure": rep.first_failure,
                "verdict": rep.verdict,
            });
        } else {
            checks.push(Check::new("extended_verdict", false));
        }
    }
    Ok((checks, result))
}

fn fixed_points(p: &FixedPointParams, tol: &ToleranceOverrides, out: &mut Outputs) -> Outcome {
    let spec = p.hamiltonian();
    let half = p
        .half_width
        .unwrap_or(1.5 * spec.support_radius().max(spec.length_scale()));
    let census = find_fixed_points(&spec, SearchBox::centered(half), p.density)?;
    let worst = census.points.iter().map(|f| f.residual).fold(0.0, f64::max);
    let checks = vec![
        Check::at_most("newton_residual", worst, tol.newton.unwrap_or(1e-10)),
        Check::new(
            "nondegenerate",
            census.count(FixedPointType::Degenerate) == 0,
        ),
    ];
    let mut w = csv::Writer::from_writer(out.file("csv")?);
    w.write_record(["x", "y", "type", "hessian_det", "residual"])?;
    for f in &census.points {
        w.write_record([
            format!("{:e}", f.location.x),
            format!("{:e}", f.location.y),
            to_value(&f.kind)?.as_str().unwrap_or_default().to_string(),
            format!("{:e}", f.hessian_det),
            format!("{:e}", f.residual),
        ])?;
    }
    w.flush()?;
    out.plot("fixed points", "csv", "point", "x", "y");
    let result = json!({
        "search_half_width": half,
        "hyperbolic": census.count(FixedPointType::Hyperbolic),
        "elliptic": census.count(FixedPointType::Elliptic),
        "degenerate": census.count(FixedPointType::Degenerate),
        "census": census,
    });
    Ok((checks, result))
}

fn eye(p: &EyeParams, out: &mut Outputs) -> Outcome {
    let spec = p.hamiltonian();
    let eye = eye_boundary(&spec, &IntegratorConfig::default())?;
    let inside = eye.elliptic.iter().all(|&e| eye.contains(e));
    let checks = vec![
        Check::at_most("closure_gap", eye.closure_gap, eye.tolerance),
        Check::new("elliptic_inside", inside),
    ];
    write_eye_csv(&eye, out.file("csv")?)?;
    out.plot("eye boundary", "csv", "line", "x", "y");
    let result = json!({
        "area": eye.area(),
        "hyperbolic": eye.hyperbolic,
        "elliptic": eye.elliptic,
        "vertices": eye.polyline.len(),
        "closure_gap": eye.closure_gap,
    });
    Ok((checks, result))
}

fn torus(p: &TorusParams) -> anyhow::Result<TorusSHS> {
    let (f, g) = build_radial_profiles(p.p, p.q, &p.s, p.r1, p.r2)?;
    Ok(crate::torus_shs::assemble_torus_shs(
        f,
        g,
        p.s.clone(),
        RadialFn::one(),
    )?)
}

fn torus_build(p: &TorusParams, out: &mut Outputs) -> Outcome {
    let shs = torus(p)?;
    write_profile_csv(&shs, p.profile_points, out.file("csv")?)?;
    out.plot("radial profiles f", "csv", "line", "r", "f");
    out.plot("radial profiles g", "csv", "line", "r", "g");
    out.plot(
        "lambda ^ dlambda density",
        "csv",
        "line",
        "r",
        "lambda_dlambda",
    );
    let exact = (0..=50).all(|i| {
        let r = 0.5 + 0.01 * i as f64;
        shs.lambda().at(r).components == [0.0, p.q as f64, p.p as f64]
    });
    let checks = vec![Check::new("boundary_form_exact", exact)];
    Ok((checks, to_value(&shs)?))
}

fn torus_verify(p: &TorusParams, tol: &ToleranceOverrides, out: &mut Outputs) -> Outcome {
    let shs = torus(p)?;
    let grid = GridSpec {
        radial: p.radial,
        angular: p.angular,
    };
    let tols = tol.axioms.unwrap_or_default();
    let rep = crate::torus_shs::verify_shs_axioms_with(&shs.pair(), &grid, Some(&shs.s), &tols);
    write_profile_csv(&shs, p.profile_points, out.file("csv")?)?;
    out.plot(
        "lambda ^ dlambda density",
        "csv",
        "line",
        "r",
        "lambda_dlambda",
    );
    let checks = vec![
        Check::at_most("d_omega", rep.d_omega_max, tols.d_omega),
        Check::at_most("kernel", rep.kernel_residual_max, tols.kernel),
        Check::at_most("reeb_kernel", rep.reeb_kernel_max, tols.reeb_kernel),
        Check::at_most(
            "reeb_normalization",
            rep.reeb_normalization_max,
            tols.reeb_normalization,
        ),
        Check::above(
            "omega_lambda_where_scaled",
            rep.omega_lambda_min_where_scaled,
            0.0,
        ),
        Check {
            name: "lambda_dlambda".into(),
            pass: rep.lambda_dlambda_min >= tols.contact_floor,
            value: Some(rep.lambda_dlambda_min),
            threshold: Some(tols.contact_floor),
        },
        Check::at_most("divergence", rep.divergence_max, tols.divergence),
        Check::new("axis_parity", rep.parity_failures.is_empty()),
        Check::new("all_axioms", rep.pass),
    ];
    Ok((checks, to_value(&rep)?))
}

fn torus_glue(p: &GlueParams, tol: &ToleranceOverrides) -> Outcome {
    let interior = TorusSHS::standard(p.p, p.q, p.s.clone())?;
    let mut exterior = interior.pair();
    exterior.omega_scale = RadialFn::constant(p.exterior_scale);
    let rep = glue_surgery(&exterior, &interior, p.samples)?;
    let limit = tol.glue.unwrap_or(1e-10);
    let recovery = rep
        .scaling
        .iter()
        .map(|h| (h * p.exterior_scale - 1.0).abs())
        .fold(0.0, f64::max);
    let checks = vec![
        Check::at_most("omega_mismatch", rep.omega_mismatch, limit),
        Check::at_most("lambda_mismatch", rep.lambda_mismatch, limit),
        Check::at_most("reeb_mismatch", rep.reeb_mismatch, limit),
        Check::at_most("scaling_recovery", recovery, limit),
        Check::new("glue", rep.pass),
    ];
    Ok((checks, to_value(&rep)?))
}

fn slopes_scan(p: &ScanParams, out: &mut Outputs) -> Outcome {
    let scan = scan_slopes(-p.pmax..=p.pmax, 1..=p.qmax, -p.rmax..=p.rmax);
    let identities = scan.rows.iter().all(|v| {
        let (a, b) = (v.slope.numerator(), v.slope.denominator());
        let expect = if v.degeneracy.is_infinite() {
            b.unsigned_abs()
        } else {
            (a - v.degeneracy.numerator() * b).unsigned_abs()
        };
        v.iota == expect
    });
    let checks = vec![
        Check::new("bound_holds", scan.summary.bound_holds),
        Check::new("iota_identities", identities),
    ];
    // Per-q minimum of iota over V, for plotting.
    let mut w = csv::Writer::from_writer(out.file("csv")?);
    w.write_record(["q", "v_members", "min_iota"])?;
    for q in 1..=p.qmax {
        let mut members = std::collections::BTreeSet::new();
        let mut min: Option<u64> = None;
        for v in scan.rows.iter().filter(|v| v.slope.denominator() == q) {
            if in_V(v.slope.numerator(), q)? {
                members.insert(v.slope.numerator());
                min = Some(min.map_or(v.iota, |m| m.min(v.iota)));
            }
        }
        w.write_record([
            q.to_string(),
            members.len().to_string(),
            min.map_or(String::new(), |m| m.to_string()),
        ])?;
    }
    w.flush()?;
    out.plot(
        "minimum prong count over V by denominator",
        "csv",
        "point",
        "q",
        "min_iota",
    );
    if p.rows_csv {
        write_scan_csv(&scan.rows, out.file("rows.csv")?)?;
    }
    Ok((checks, to_value(&scan.summary)?))
}

fn slopes_check(p: &SlopeCheckParams) -> Outcome {
    let member = in_V(p.p, p.q)?;
    let slope = Slope::new(p.p, p.q)?;
    let mut verdicts = vec![surgery_verdict(slope, Slope::INFINITY)?];
    for &r in &p.r {
        verdicts.push(surgery_verdict(slope, Slope::integer(r))?);
    }
    let singular = verdicts.iter().all(|v| v.singular_core);
    // Membership in V must force a singular core; outside V nothing is claimed.
    let checks = vec![Check::new("v_implies_singular_core", !member || singular)];
    let result = json!({ "slope": slope, "in_v": member, "verdicts": verdicts });
    Ok((checks, result))
}

fn sft_product(p: &SftProblem) -> Outcome {
    let mut table = p.orbits.clone();
    table.reindex()?;
    let h = HPoly::new(&table, p.h.clone(), p.allow_even_terms)?;
    let mut rows = Vec::new();
    let mut d2_zero = true;
    let mut truncated = false;
    for x in &p.monomials {
        let dx = table.differential(x, &h)?;
        truncated |= dx.truncated;
        let mut row = json!({ "x": table.canonicalize_monomial(x)?, "dx": dx });
        if p.d_squared {
            let d2: QSum = table.differential_of_sum(&dx, &h)?;
            d2_zero &= d2.is_empty();
            truncated |= d2.truncated;
            row["ddx"] = to_value(&d2)?;
        }
        rows.push(row);
    }
    let mut checks = Vec::new();
    if p.d_squared {
        checks.push(Check::new("d_squared_zero", d2_zero));
    }
    Ok((checks, json!({ "products": rows, "truncated": truncated })))
}

/// Conjunction of several reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergedReport {
    pub reports: Vec<MergedEntry>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergedEntry {
    pub file: String,
    pub experiment: String,
    pub pass: bool,
    pub failed_checks: Vec<String>,
}

pub fn merge_reports(files: &[std::path::PathBuf]) -> anyhow::Result<MergedReport> {
    let mut reports = Vec::new();
    for f in files {
        let text = fs::read_to_string(f).with_context(|| format!("reading {}", f.display()))?;
        let r: RunReport =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", f.display()))?;
        reports.push(MergedEntry {
            file: f.display().to_string(),
            experiment: r.experiment,
            pass: r.pass,
            failed_checks: r
                .checks
                .into_iter()
                .filter(|c| !c.pass)
                .map(|c| c.name)
                .collect(),
        });
    }
    let pass = reports.iter().all(|r| r.pass);
    Ok(MergedReport { reports, pass })
}

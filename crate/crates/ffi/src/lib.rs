//! C ABI over `shsverify`.
//!
//! Every fallible function returns a [`ShsStatus`]. On anything but
//! `SHS_STATUS_OK` a message is stored per thread; read it with
//! [`shs_last_error_length`] and [`shs_last_error_message`]. Handles are
//! opaque and must be released with their `_free` function; strings handed
//! out by the library are released with [`shs_string_free`]. Panics never
//! cross the boundary.

#![allow(clippy::missing_safety_doc, clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use shsverify::blowup::{
    certify_cone_contraction, find_fixed_points, monkey_saddle_spec, recheck_archived_margins,
    CertificateConfig, ConeCertificate, FixedPointType, SearchBox,
};
use shsverify::cli::{execute, ExperimentConfig};
use shsverify::ham2d::{flow_with_jacobian, HamiltonianSpec, IntegratorConfig, Point2};
use shsverify::sftq::{run_suite, Suite};
use shsverify::slopes::{in_V, intersection_number, Slope};
use shsverify::torus_shs::{GridSpec, RadialFn, TorusSHS};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ComputationFailed = 3,
    Io = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShsSuite {
    Oracle = 0,
    Koszul = 1,
    Parity = 2,
}

/// Opaque planar Hamiltonian.
pub struct ShsHamiltonian(HamiltonianSpec);

/// Opaque cone-contraction certificate.
pub struct ShsCertificate(ConeCertificate);

/// Opaque solid-torus stable Hamiltonian structure.
pub struct ShsTorus(TorusSHS);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ShsCertificateSummary {
    pub passed: bool,
    pub all_returned: bool,
    pub min_margin: f64,
    pub samples: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ShsAxiomSummary {
    pub passed: bool,
    pub points: usize,
    pub d_omega_max: f64,
    pub kernel_residual_max: f64,
    pub reeb_kernel_max: f64,
    pub reeb_normalization_max: f64,
    pub lambda_dlambda_min: f64,
    pub omega_lambda_min: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(ShsStatus, String);

impl Failure {
    fn invalid(msg: impl Into<String>) -> Self {
        Failure(ShsStatus::InvalidArgument, msg.into())
    }

    fn compute(e: impl std::fmt::Display) -> Self {
        Failure(ShsStatus::ComputationFailed, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ShsStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ShsStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            ShsStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure(ShsStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure(ShsStatus::NullPointer, format!("{what} is null")))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(ShsStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::invalid(format!("{what} is not UTF-8")))
}

fn c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure::compute("string contains a NUL byte"))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn shs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Bytes needed for the last error message including the NUL, or 0.
#[no_mangle]
pub extern "C" fn shs_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(0, |c| c.as_bytes().len() + 1))
}

/// Copy the last error message into `buf`, truncating to `len - 1` bytes.
/// Returns the number of bytes written, excluding the NUL.
#[no_mangle]
pub unsafe extern "C" fn shs_last_error_message(buf: *mut c_char, len: usize) -> usize {
    if buf.is_null() || len == 0 {
        return 0;
    }
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_ref().map_or(&[][..], |c| c.as_bytes());
        let n = bytes.len().min(len - 1);
        ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
        *buf.add(n) = 0;
        n
    })
}

#[no_mangle]
pub unsafe extern "C" fn shs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

unsafe fn new_hamiltonian(
    spec: HamiltonianSpec,
    dst: *mut *mut ShsHamiltonian,
) -> Result<(), Failure> {
    let dst = out(dst, "out")?;
    spec.validate()
        .map_err(|e| Failure::invalid(e.to_string()))?;
    *dst = boxed(ShsHamiltonian(spec));
    Ok(())
}

/// `(x^2 - y^2) / 2`.
#[no_mangle]
pub unsafe extern "C" fn shs_hamiltonian_quad_saddle(dst: *mut *mut ShsHamiltonian) -> ShsStatus {
    guard(|| new_hamiltonian(HamiltonianSpec::QuadSaddle, dst))
}

/// The blowup Hamiltonian with the default bump.
#[no_mangle]
pub unsafe extern "C" fn shs_hamiltonian_blowup(
    amplitude: f64,
    eps: f64,
    dst: *mut *mut ShsHamiltonian,
) -> ShsStatus {
    guard(|| new_hamiltonian(HamiltonianSpec::blowup(amplitude, eps), dst))
}

#[no_mangle]
pub unsafe extern "C" fn shs_hamiltonian_monkey_saddle(
    k: u32,
    delta: f64,
    cutoff_radius: f64,
    dst: *mut *mut ShsHamiltonian,
) -> ShsStatus {
    guard(|| {
        let spec = monkey_saddle_spec(k, delta, cutoff_radius)
            .map_err(|e| Failure::invalid(e.to_string()))?;
        new_hamiltonian(spec, dst)
    })
}

/// Any Hamiltonian in its JSON form, e.g. `{"kind": "quad_saddle"}`.
#[no_mangle]
pub unsafe extern "C" fn shs_hamiltonian_from_json(
    json: *const c_char,
    dst: *mut *mut ShsHamiltonian,
) -> ShsStatus {
    guard(|| {
        let spec: HamiltonianSpec = serde_json::from_str(text(json, "json")?)
            .map_err(|e| Failure::invalid(e.to_string()))?;
        new_hamiltonian(spec, dst)
    })
}

#[no_mangle]
pub unsafe extern "C" fn shs_hamiltonian_free(h: *mut ShsHamiltonian) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

#[no_mangle]
pub unsafe extern "C" fn shs_hamiltonian_value(
    h: *const ShsHamiltonian,
    x: f64,
    y: f64,
    value: *mut f64,
) -> ShsStatus {
    guard(|| {
        let h = deref(h, "hamiltonian")?;
        *out(value, "value")? = h.0.value(Point2::new(x, y)).map_err(Failure::compute)?;
        Ok(())
    })
}

/// Time-`t` flow from `(x, y)`. `point` receives 2 doubles; `jacobian`, if
/// not null, receives 4 in row-major order.
#[no_mangle]
pub unsafe extern "C" fn shs_flow(
    h: *const ShsHamiltonian,
    x: f64,
    y: f64,
    t: f64,
    point: *mut f64,
    jacobian: *mut f64,
) -> ShsStatus {
    guard(|| {
        let h = deref(h, "hamiltonian")?;
        let point = out(point, "point")?;
        let mut cfg = IntegratorConfig::default();
        cfg.max_time = cfg.max_time.max(t.abs());
        let f = flow_with_jacobian(&h.0, Point2::new(x, y), t, &cfg).map_err(Failure::compute)?;
        let p = std::slice::from_raw_parts_mut(point, 2);
        p.copy_from_slice(&f.point.to_array());
        if !jacobian.is_null() {
            let j = std::slice::from_raw_parts_mut(jacobian, 4);
            j.copy_from_slice(&[
                f.jacobian.0[0][0],
                f.jacobian.0[0][1],
                f.jacobian.0[1][0],
                f.jacobian.0[1][1],
            ]);
        }
        Ok(())
    })
}

/// Counts of hyperbolic, elliptic and degenerate zeros of the field in the
/// square of half-width `half_width`.
#[no_mangle]
pub unsafe extern "C" fn shs_fixed_point_counts(
    h: *const ShsHamiltonian,
    half_width: f64,
    density: usize,
    hyperbolic: *mut usize,
    elliptic: *mut usize,
    degenerate: *mut usize,
) -> ShsStatus {
    guard(|| {
        let h = deref(h, "hamiltonian")?;
        let (hy, el, de) = (
            out(hyperbolic, "hyperbolic")?,
            out(elliptic, "elliptic")?,
            out(degenerate, "degenerate")?,
        );
        if !(half_width > 0.0) {
            return Err(Failure::invalid("half_width must be positive"));
        }
        let c = find_fixed_points(&h.0, SearchBox::centered(half_width), density)
            .map_err(Failure::compute)?;
        *hy = c.count(FixedPointType::Hyperbolic);
        *el = c.count(FixedPointType::Elliptic);
        *de = c.count(FixedPointType::Degenerate);
        Ok(())
    })
}

/// Run the cone-contraction certificate on the circle of `radius`.
/// `max_time <= 0` keeps the default integration horizon.
#[no_mangle]
pub unsafe extern "C" fn shs_certify(
    h: *const ShsHamiltonian,
    radius: f64,
    samples: usize,
    max_time: f64,
    dst: *mut *mut ShsCertificate,
) -> ShsStatus {
    guard(|| {
        let h = deref(h, "hamiltonian")?;
        let dst = out(dst, "out")?;
        let mut cc = CertificateConfig::new(radius, samples);
        if max_time > 0.0 {
            cc.integrator.max_time = max_time;
        }
        let cert = certify_cone_contraction(&h.0, &cc).map_err(Failure::compute)?;
        *dst = boxed(ShsCertificate(cert));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn shs_certificate_summary(
    c: *const ShsCertificate,
    summary: *mut ShsCertificateSummary,
) -> ShsStatus {
    guard(|| {
        let c = &deref(c, "certificate")?.0;
        *out(summary, "summary")? = ShsCertificateSummary {
            passed: c.verdict.passed(),
            all_returned: c.all_returned,
            min_margin: c.min_margin,
            samples: c.samples.len(),
        };
        Ok(())
    })
}

/// Largest margin change when recomputed from the archived Jacobians.
#[no_mangle]
pub unsafe extern "C" fn shs_certificate_recheck(
    c: *const ShsCertificate,
    drift: *mut f64,
) -> ShsStatus {
    guard(|| {
        let c = deref(c, "certificate")?;
        *out(drift, "drift")? = recheck_archived_margins(&c.0).map_err(Failure::compute)?;
        Ok(())
    })
}

/// The full certificate as JSON; free with `shs_string_free`.
#[no_mangle]
pub unsafe extern "C" fn shs_certificate_to_json(
    c: *const ShsCertificate,
    json: *mut *mut c_char,
) -> ShsStatus {
    guard(|| {
        let c = deref(c, "certificate")?;
        let dst = out(json, "json")?;
        *dst = c_string(serde_json::to_string(&c.0).map_err(Failure::compute)?)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn shs_certificate_free(c: *mut ShsCertificate) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Standard structure with boundary form `q dtheta + p dpsi` and Reeb slope
/// profile given by polynomial coefficients `s[0] + s[1] r + ...`.
#[no_mangle]
pub unsafe extern "C" fn shs_torus_standard(
    p: i64,
    q: i64,
    s: *const f64,
    s_len: usize,
    dst: *mut *mut ShsTorus,
) -> ShsStatus {
    guard(|| {
        let dst = out(dst, "out")?;
        let coeffs = if s_len == 0 {
            Vec::new()
        } else {
            deref(s, "s")?;
            std::slice::from_raw_parts(s, s_len).to_vec()
        };
        let shs = TorusSHS::standard(p, q, RadialFn::polynomial(coeffs))
            .map_err(|e| Failure::invalid(e.to_string()))?;
        *dst = boxed(ShsTorus(shs));
        Ok(())
    })
}

/// Check the axioms on `radial x angular x angular` points.
#[no_mangle]
pub unsafe extern "C" fn shs_torus_verify(
    t: *const ShsTorus,
    radial: usize,
    angular: usize,
    summary: *mut ShsAxiomSummary,
) -> ShsStatus {
    guard(|| {
        let t = deref(t, "torus")?;
        let dst = out(summary, "summary")?;
        if radial == 0 || angular == 0 {
            return Err(Failure::invalid("grid sizes must be positive"));
        }
        let r = t.0.verify(&GridSpec { radial, angular });
        *dst = ShsAxiomSummary {
            passed: r.pass,
            points: r.points,
            d_omega_max: r.d_omega_max,
            kernel_residual_max: r.kernel_residual_max,
            reeb_kernel_max: r.reeb_kernel_max,
            reeb_normalization_max: r.reeb_normalization_max,
            lambda_dlambda_min: r.lambda_dlambda_min,
            omega_lambda_min: r.omega_lambda_min,
        };
        Ok(())
    })
}

/// `(R_r, R_theta, R_psi)` at radius `r` into `reeb[3]`.
#[no_mangle]
pub unsafe extern "C" fn shs_torus_reeb(t: *const ShsTorus, r: f64, reeb: *mut f64) -> ShsStatus {
    guard(|| {
        let t = deref(t, "torus")?;
        out(reeb, "reeb")?;
        if !(0.0..=1.0).contains(&r) {
            return Err(Failure::invalid(format!("radius {r} is outside [0, 1]")));
        }
        std::slice::from_raw_parts_mut(reeb, 3).copy_from_slice(&t.0.reeb(r));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn shs_torus_free(t: *mut ShsTorus) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// `|a d - b c|` for the slopes `a/b` and `c/d`.
#[no_mangle]
pub unsafe extern "C" fn shs_slope_intersection(
    a: i64,
    b: i64,
    c: i64,
    d: i64,
    iota: *mut u64,
) -> ShsStatus {
    guard(|| {
        let dst = out(iota, "iota")?;
        let u = Slope::new(a, b).map_err(|e| Failure::invalid(e.to_string()))?;
        let v = Slope::new(c, d).map_err(|e| Failure::invalid(e.to_string()))?;
        *dst = intersection_number(u, v);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn shs_slope_in_v(p: i64, q: i64, member: *mut bool) -> ShsStatus {
    guard(|| {
        *out(member, "member")? = in_V(p, q).map_err(|e| Failure::invalid(e.to_string()))?;
        Ok(())
    })
}

/// Run a seeded SFT suite; `failures` may be null.
#[no_mangle]
pub unsafe extern "C" fn shs_sft_suite(
    suite: ShsSuite,
    seed: u64,
    cases: usize,
    passed: *mut bool,
    failures: *mut usize,
) -> ShsStatus {
    guard(|| {
        let dst = out(passed, "passed")?;
        let suite = match suite {
            ShsSuite::Oracle => Suite::Oracle,
            ShsSuite::Koszul => Suite::Koszul,
            ShsSuite::Parity => Suite::Parity,
        };
        let rep = run_suite(suite, seed, cases).map_err(Failure::compute)?;
        *dst = rep.pass;
        if let Some(f) = failures.as_mut() {
            *f = rep.failure_count;
        }
        Ok(())
    })
}

/// Run an experiment config (the JSON accepted by `shsverify run`), writing
/// artifacts under `out_dir` with file stem `stem`. The report JSON is
/// returned in `report` (free with `shs_string_free`); a run whose checks
/// fail still returns `SHS_STATUS_OK` with `"pass": false`.
#[no_mangle]
pub unsafe extern "C" fn shs_run_config(
    config_json: *const c_char,
    out_dir: *const c_char,
    stem: *const c_char,
    report: *mut *mut c_char,
) -> ShsStatus {
    guard(|| {
        let cfg: ExperimentConfig = serde_json::from_str(text(config_json, "config_json")?)
            .map_err(|e| Failure::invalid(e.to_string()))?;
        let dir = text(out_dir, "out_dir")?;
        let stem = if stem.is_null() {
            cfg.experiment.name()
        } else {
            text(stem, "stem")?
        };
        let dst = out(report, "report")?;
        if cfg.experiment.needs_seed() && cfg.seed.is_none() {
            return Err(Failure::invalid(format!(
                "`{}` is randomized; set `seed`",
                cfg.experiment.name()
            )));
        }
        let rep = execute(&cfg, Path::new(dir), stem).map_err(|e| {
            let io = e.chain().any(|c| c.is::<std::io::Error>());
            let status = if io {
                ShsStatus::Io
            } else {
                ShsStatus::ComputationFailed
            };
            Failure(status, format!("{e:#}"))
        })?;
        *dst = c_string(serde_json::to_string(&rep).map_err(Failure::compute)?)?;
        Ok(())
    })
}

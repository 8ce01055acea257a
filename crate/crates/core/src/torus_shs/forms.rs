//! Cylindrically symmetric forms on the solid torus and the stable
//! Hamiltonian structure axioms.
//!
//! Coordinates are `(r, theta, psi)`, with `theta` the angle on the disk and
//! `psi` along the core circle; `dr ^ dtheta ^ dpsi` is positive. All
//! densities below are coefficients of `dr ^ dtheta ^ dpsi`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::radial::{AxisParity, RadialFn};
use crate::jet::Taylor;

/// `dr` + `dtheta` + `dpsi` components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneForm {
    pub dr: RadialFn,
    pub dtheta: RadialFn,
    pub dpsi: RadialFn,
}

/// `dtheta^dpsi` + `dpsi^dr` + `dr^dtheta` components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoForm {
    pub theta_psi: RadialFn,
    pub psi_r: RadialFn,
    pub r_theta: RadialFn,
}

/// Components and their radial derivatives at one radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormValue {
    pub degree: u8,
    pub components: [f64; 3],
    pub radial_derivatives: [f64; 3],
}

impl OneForm {
    pub fn new(dr: RadialFn, dtheta: RadialFn, dpsi: RadialFn) -> Self {
        Self { dr, dtheta, dpsi }
    }

    /// `a self + b other`.
    pub fn combine(a: f64, x: &OneForm, b: f64, y: &OneForm) -> OneForm {
        let mix = |u: &RadialFn, v: &RadialFn| u.clone().scaled(a).plus(v.clone().scaled(b));
        OneForm {
            dr: mix(&x.dr, &y.dr),
            dtheta: mix(&x.dtheta, &y.dtheta),
            dpsi: mix(&x.dpsi, &y.dpsi),
        }
    }

    pub fn at(&self, r: f64) -> FormValue {
        let t = [
            self.dr.taylor(r),
            self.dtheta.taylor(r),
            self.dpsi.taylor(r),
        ];
        FormValue {
            degree: 1,
            components: t.map(|x| x.value()),
            radial_derivatives: t.map(|x| x.derivative(1)),
        }
    }
}

impl TwoForm {
    pub fn at(&self, r: f64) -> FormValue {
        let t = [
            self.theta_psi.taylor(r),
            self.psi_r.taylor(r),
            self.r_theta.taylor(r),
        ];
        FormValue {
            degree: 2,
            components: t.map(|x| x.value()),
            radial_derivatives: t.map(|x| x.derivative(1)),
        }
    }
}

/// A candidate stable Hamiltonian structure `(scale * omega, lambda)`.
/// The Reeb direction is taken from the kernel of the unscaled `omega`, so
/// that a scale vanishing on a subdisk still has a well-defined Reeb field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormPair {
    pub lambda: OneForm,
    pub omega: TwoForm,
    #[serde(default = "RadialFn::one")]
    pub omega_scale: RadialFn,
}

impl FormPair {
    pub fn new(lambda: OneForm, omega: TwoForm) -> Self {
        Self {
            lambda,
            omega,
            omega_scale: RadialFn::one(),
        }
    }

    /// Reeb field `(R_r, R_theta, R_psi)` at radius `r > 0`.
    pub fn reeb(&self, r: f64) -> [f64; 3] {
        let pt = PointData::at(self, r);
        pt.reeb.map(|x| x.value())
    }

    /// Reeb slope `R_theta / R_psi`.
    pub fn slope(&self, r: f64) -> f64 {
        let v = self.reeb(r);
        v[1] / v[2]
    }
}

/// `radial` radii `i / radial`, `i = 1..=radial`, times an
/// `angular x angular` grid of `(theta, psi)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub radial: usize,
    pub angular: usize,
}

impl GridSpec {
    pub fn points(&self) -> usize {
        self.radial * self.angular * self.angular
    }

    pub fn radii(&self) -> impl Iterator<Item = f64> + '_ {
        (1..=self.radial).map(|i| i as f64 / self.radial as f64)
    }
}

impl Default for GridSpec {
    /// 10^4 points.
    fn default() -> Self {
        Self {
            radial: 100,
            angular: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxiomTolerances {
    pub d_omega: f64,
    pub kernel: f64,
    pub reeb_kernel: f64,
    pub reeb_normalization: f64,
    pub contact_floor: f64,
    pub divergence: f64,
    pub parity: f64,
}

impl Default for AxiomTolerances {
    fn default() -> Self {
        Self {
            d_omega: 1e-9,
            kernel: 1e-9,
            reeb_kernel: 1e-10,
            reeb_normalization: 1e-10,
            contact_floor: -1e-12,
            divergence: 1e-8,
            parity: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub grid: GridSpec,
    pub points: usize,
    /// `max |d(omega)|`.
    pub d_omega_max: f64,
    /// `min (omega ^ lambda) / r`, the density against the Euclidean volume.
    pub omega_lambda_min: f64,
    /// Minimum of the same density where the scale of omega is positive.
    pub omega_lambda_min_where_scaled: f64,
    /// Largest radius at which `omega ^ lambda` vanishes, if any.
    pub degenerate_radius_max: Option<f64>,
    /// `max |d lambda(R, e)|` over the frame `d/dx, d/dy, d/dpsi`.
    pub kernel_residual_max: f64,
    /// `max |omega(R, e)|` over the same frame.
    pub reeb_kernel_max: f64,
    /// `max |lambda(R) - 1|`.
    pub reeb_normalization_max: f64,
    /// `min` of the `lambda ^ d lambda` density.
    pub lambda_dlambda_min: f64,
    /// `max |div R|` with respect to the volume `omega ^ lambda`.
    pub divergence_max: f64,
    /// Coefficients that do not extend smoothly through the axis.
    pub parity_failures: Vec<String>,
    /// `max |lambda^dlambda - f'(g + f s)|`, when the slope profile is known.
    pub contact_identity_max: Option<f64>,
    pub tolerances: AxiomTolerances,
    pub pass: bool,
}

pub(crate) struct PointData {
    pub lambda: [Taylor; 3],
    pub omega: [Taylor; 3],
    pub scale: Taylor,
    pub reeb: [Taylor; 3],
    pub volume: Taylor,
}

impl PointData {
    pub fn at(pair: &FormPair, r: f64) -> Self {
        let lambda = [
            pair.lambda.dr.taylor(r),
            pair.lambda.dtheta.taylor(r),
            pair.lambda.dpsi.taylor(r),
        ];
        let omega = [
            pair.omega.theta_psi.taylor(r),
            pair.omega.psi_r.taylor(r),
            pair.omega.r_theta.taylor(r),
        ];
        // ker(c dth^dps + a dps^dr + b dr^dth) is spanned by (c, a, b).
        let volume = omega[0] * lambda[0] + omega[1] * lambda[1] + omega[2] * lambda[2];
        let reeb = omega.map(|w| w / volume);
        Self {
            lambda,
            omega,
            scale: pair.omega_scale.taylor(r),
            reeb,
            volume,
        }
    }
}

/// Covector `(a_r, a_theta, a_psi)` evaluated on `d/dx, d/dy, d/dpsi`.
fn on_frame(a: [f64; 3], r: f64, theta: f64) -> [f64; 3] {
    let (s, c) = theta.sin_cos();
    [a[0] * c - a[1] * s / r, a[0] * s + a[1] * c / r, a[2]]
}

/// `iota_v` of the 2-form with components `(c, a, b)`.
fn contract(w: [f64; 3], v: [f64; 3]) -> [f64; 3] {
    let [c, a, b] = w;
    [
        a * v[2] - b * v[1],
        b * v[0] - c * v[2],
        c * v[1] - a * v[0],
    ]
}

#[derive(Default, Clone, Copy)]
struct Acc {
    d_omega: f64,
    ol_min: f64,
    ol_min_scaled: f64,
    degenerate_r: Option<f64>,
    kernel: f64,
    reeb_kernel: f64,
    norm: f64,
    contact_min: f64,
    divergence: f64,
    identity: Option<f64>,
}

impl Acc {
    fn empty() -> Self {
        Self {
            ol_min: f64::INFINITY,
            ol_min_scaled: f64::INFINITY,
            contact_min: f64::INFINITY,
            ..Default::default()
        }
    }

    fn merge(self, o: Acc) -> Acc {
        let opt_max = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(x), Some(y)) => Some(x.max(y)),
            (x, None) => x,
            (None, y) => y,
        };
        Acc {
            d_omega: self.d_omega.max(o.d_omega),
            ol_min: self.ol_min.min(o.ol_min),
            ol_min_scaled: self.ol_min_scaled.min(o.ol_min_scaled),
            degenerate_r: opt_max(self.degenerate_r, o.degenerate_r),
            kernel: self.kernel.max(o.kernel),
            reeb_kernel: self.reeb_kernel.max(o.reeb_kernel),
            norm: self.norm.max(o.norm),
            contact_min: self.contact_min.min(o.contact_min),
            divergence: self.divergence.max(o.divergence),
            identity: opt_max(self.identity, o.identity),
        }
    }
}

fn parity_failures(pair: &FormPair, tol: f64) -> Vec<String> {
    let mut out = Vec::new();
    let mut need = |name: &str, f: &RadialFn, parity: AxisParity, vanish: bool| {
        let got = f.axis_parity(tol);
        let zero = f.taylor(0.0).coefficients().iter().all(|c| c.abs() <= tol);
        let ok = zero || got == parity;
        if !ok {
            out.push(format!(
                "{name}: expected {parity:?} at the axis, found {got:?}"
            ));
        } else if vanish && f.value(0.0).abs() > tol {
            out.push(format!(
                "{name}: must vanish at the axis, found {}",
                f.value(0.0)
            ));
        }
    };
    need("lambda.dr", &pair.lambda.dr, AxisParity::Odd, false);
    need("lambda.dtheta", &pair.lambda.dtheta, AxisParity::Even, true);
    need("lambda.dpsi", &pair.lambda.dpsi, AxisParity::Even, false);
    need(
        "omega.theta_psi",
        &pair.omega.theta_psi,
        AxisParity::Even,
        true,
    );
    need("omega.psi_r", &pair.omega.psi_r, AxisParity::Odd, false);
    need("omega.r_theta", &pair.omega.r_theta, AxisParity::Odd, false);
    need("omega_scale", &pair.omega_scale, AxisParity::Even, false);
    out
}

fn evaluate_radius(pair: &FormPair, r: f64, angular: usize, slope: Option<&RadialFn>) -> Acc {
    let pt = PointData::at(pair, r);
    let [e, f, g] = pt.lambda;
    let h = pt.scale;
    let mut acc = Acc::empty();

    acc.d_omega = (h * pt.omega[0]).derivative(1).abs();
    let density = (h * pt.volume).value() / r;
    acc.ol_min = density;
    if h.value() > 1e-14 {
        acc.ol_min_scaled = density;
    }
    if density <= 1e-12 {
        acc.degenerate_r = Some(r);
    }
    let reeb = pt.reeb.map(|x| x.value());
    acc.norm = (e.value() * reeb[0] + f.value() * reeb[1] + g.value() * reeb[2] - 1.0).abs();

    // d lambda = f' dr^dth + g' dr^dps, i.e. (c, a, b) = (0, -g', f').
    let (df, dg) = (f.derivative(1), g.derivative(1));
    let dl = contract([0.0, -dg, df], reeb);
    let om = contract(pt.omega.map(|x| x.value() * h.value()), reeb);
    for i in 0..angular {
        let theta = std::f64::consts::TAU * i as f64 / angular as f64;
        // Nothing depends on psi; the psi grid contributes identical rows.
        let k = on_frame(dl, r, theta);
        let w = on_frame(om, r, theta);
        for j in 0..3 {
            acc.kernel = acc.kernel.max(k[j].abs());
            acc.reeb_kernel = acc.reeb_kernel.max(w[j].abs());
        }
    }

    let contact = g.value() * df - f.value() * dg;
    acc.contact_min = contact;
    if let Some(s) = slope {
        let expected = df * (g.value() + f.value() * s.value(r));
        acc.identity = Some((contact - expected).abs());
    }
    // div R = (m R_r)' / m for the volume m dr^dth^dps.
    let flux = pt.volume * pt.reeb[0];
    acc.divergence = (flux.derivative(1) / pt.volume.value()).abs();
    acc
}

pub fn verify_shs_axioms_with(
    pair: &FormPair,
    grid: &GridSpec,
    slope: Option<&RadialFn>,
    tol: &AxiomTolerances,
) -> AxiomReport {
    let radii: Vec<f64> = grid.radii().collect();
    let acc = radii
        .par_iter()
        .map(|&r| evaluate_radius(pair, r, grid.angular.max(1), slope))
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Acc::empty(), Acc::merge);
    let parity = parity_failures(pair, tol.parity);
    let pass = acc.d_omega <= tol.d_omega
        && acc.ol_min >= tol.contact_floor
        && acc.ol_min_scaled > 0.0
        && acc.kernel <= tol.kernel
        && acc.reeb_kernel <= tol.reeb_kernel
        && acc.norm <= tol.reeb_normalization
        && acc.contact_min >= tol.contact_floor
        && acc.divergence <= tol.divergence
        && parity.is_empty()
        && acc.identity.is_none_or(|x| x <= 1e-10);
    AxiomReport {
        grid: *grid,
        points: grid.points(),
        d_omega_max: acc.d_omega,
        omega_lambda_min: acc.ol_min,
        omega_lambda_min_where_scaled: acc.ol_min_scaled,
        degenerate_radius_max: acc.degenerate_r,
        kernel_residual_max: acc.kernel,
        reeb_kernel_max: acc.reeb_kernel,
        reeb_normalization_max: acc.norm,
        lambda_dlambda_min: acc.contact_min,
        divergence_max: acc.divergence,
        parity_failures: parity,
        contact_identity_max: acc.identity,
        tolerances: *tol,
        pass,
    }
}

/// Check `d omega = 0`, `omega ^ lambda > 0` (`>= 0` where the scale of omega
/// vanishes), `ker omega ⊂ ker d lambda`, `lambda ^ d lambda >= 0` and
/// smoothness at the axis on `grid`.
pub fn verify_shs_axioms(pair: &FormPair, grid: &GridSpec) -> AxiomReport {
    verify_shs_axioms_with(pair, grid, None, &AxiomTolerances::default())
}

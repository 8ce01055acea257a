use serde::{Deserialize, Serialize};

use super::forms::{
    verify_shs_axioms_with, AxiomReport, AxiomTolerances, FormPair, GridSpec, OneForm, TwoForm,
};
use super::radial::{AxisParity, RadialFn};
use super::{Result, TorusError};

/// Sample count for pointwise profile checks.
const CHECK_POINTS: usize = 1000;

fn check_radii() -> impl Iterator<Item = f64> {
    (0..=CHECK_POINTS).map(|i| i as f64 / CHECK_POINTS as f64)
}

/// `f` = `r^2` on `[0, r1]`, flat-ended bridge on `[r1, r2]`, `q` on `[r2, 1]`,
/// and `g = p + int_r^1 f' s`.
pub fn build_radial_profiles(
    p: i64,
    q: i64,
    s: &RadialFn,
    r1: f64,
    r2: f64,
) -> Result<(RadialFn, RadialFn)> {
    if p <= 0 || q <= 0 {
        return Err(TorusError::Parameter(format!(
            "profile coefficients must be positive, got p = {p}, q = {q}"
        )));
    }
    if !(0.0 < r1 && r1 < r2 && r2 < 1.0) {
        return Err(TorusError::Parameter(format!(
            "bridge radii must satisfy 0 < r1 < r2 < 1, got {r1}, {r2}"
        )));
    }
    if s.axis_parity(1e-12) != AxisParity::Even {
        return Err(TorusError::Parameter(
            "the slope profile must be even at the axis".into(),
        ));
    }
    if let Some(r) = check_radii().find(|&r| s.value(r) < 0.0) {
        return Err(TorusError::Parameter(format!(
            "the slope profile is negative at r = {r}"
        )));
    }
    let f = RadialFn::Bridge {
        q: q as f64,
        r1,
        r2,
    };
    // f' = 2 r (1 - sigma) + sigma' (q - r^2) is nonnegative once q >= r2^2.
    let n = 4000;
    for i in 0..=n {
        let r = r1 + (r2 - r1) * i as f64 / n as f64;
        let d = f.derivative(r, 1);
        if d < -1e-14 {
            return Err(TorusError::Construction(format!(
                "bridge is not monotone: f'({r}) = {d}"
            )));
        }
    }
    let g = RadialFn::StabilizerG {
        p: p as f64,
        f: Box::new(f.clone()),
        s: Box::new(s.clone()),
    };
    Ok((f, g))
}

/// The cylindrically symmetric structure `lambda = f dtheta + g dpsi`,
/// `omega = omega_scale * iota_R (rho r dr^dtheta^dpsi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusSHS {
    pub f: RadialFn,
    pub g: RadialFn,
    pub s: RadialFn,
    pub rho: RadialFn,
    #[serde(default = "RadialFn::one")]
    pub omega_scale: RadialFn,
    /// `(g(1), f(1))`, the `(p, q)` of `lambda = q dtheta + p dpsi` at the boundary.
    pub boundary: (f64, f64),
}

pub fn assemble_torus_shs(
    f: RadialFn,
    g: RadialFn,
    s: RadialFn,
    rho: RadialFn,
) -> Result<TorusSHS> {
    for r in check_radii() {
        let (tf, tg) = (f.taylor(r), g.taylor(r));
        let sv = s.value(r);
        let fail = |what: String| Err(TorusError::Assembly(format!("{what} at r = {r}")));
        if tf.derivative(1) < -1e-12 {
            return fail(format!("f' = {} < 0", tf.derivative(1)));
        }
        if !(tg.value() > 0.0) {
            return fail(format!("g = {} is not positive", tg.value()));
        }
        if !(rho.value(r) > 0.0) {
            return fail(format!("rho = {} is not positive", rho.value(r)));
        }
        let d = tf.value() * sv + tg.value();
        if !(d > 0.0) {
            return fail(format!("f s + g = {d} is not positive"));
        }
        let res = tg.derivative(1) + tf.derivative(1) * sv;
        if res.abs() > 1e-10 {
            return fail(format!("g' + f' s = {res}"));
        }
    }
    let boundary = (g.value(1.0), f.value(1.0));
    Ok(TorusSHS {
        f,
        g,
        s,
        rho,
        omega_scale: RadialFn::one(),
        boundary,
    })
}

impl TorusSHS {
    /// Build profiles and assemble with `rho = 1`.
    pub fn standard(p: i64, q: i64, s: RadialFn) -> Result<Self> {
        let (f, g) = build_radial_profiles(p, q, &s, 0.25, 0.5)?;
        assemble_torus_shs(f, g, s, RadialFn::one())
    }

    fn denominator(&self) -> RadialFn {
        self.f.clone().times(self.s.clone()).plus(self.g.clone())
    }

    pub fn lambda(&self) -> OneForm {
        OneForm::new(RadialFn::constant(0.0), self.f.clone(), self.g.clone())
    }

    /// `iota_R V` for `R = (s d/dtheta + d/dpsi)/(f s + g)`, before scaling.
    pub fn omega(&self) -> TwoForm {
        let rho_r = self.rho.clone().times(RadialFn::polynomial(vec![0.0, 1.0]));
        TwoForm {
            theta_psi: RadialFn::constant(0.0),
            psi_r: rho_r.clone().times(self.s.clone()).over(self.denominator()),
            r_theta: rho_r.over(self.denominator()),
        }
    }

    pub fn pair(&self) -> FormPair {
        FormPair {
            lambda: self.lambda(),
            omega: self.omega(),
            omega_scale: self.omega_scale.clone(),
        }
    }

    /// `(R_r, R_theta, R_psi)` from the closed form.
    pub fn reeb(&self, r: f64) -> [f64; 3] {
        let s = self.s.value(r);
        let d = self.f.value(r) * s + self.g.value(r);
        [0.0, s / d, 1.0 / d]
    }

    pub fn verify(&self, grid: &GridSpec) -> AxiomReport {
        verify_shs_axioms_with(
            &self.pair(),
            grid,
            Some(&self.s),
            &AxiomTolerances::default(),
        )
    }
}

/// Multiply `omega` by a radial `h >= 0` with `h = 1` near `r = 1`.
pub fn scale_omega_by_radial(shs: &TorusSHS, h: RadialFn) -> Result<TorusSHS> {
    for r in check_radii() {
        let v = h.value(r);
        if v < 0.0 {
            return Err(TorusError::Parameter(format!(
                "scale is negative at r = {r}: {v}"
            )));
        }
    }
    for i in 0..=50 {
        let r = 0.95 + 0.05 * i as f64 / 50.0;
        if (h.value(r) - 1.0).abs() > 1e-12 {
            return Err(TorusError::Parameter(format!(
                "scale must equal 1 near r = 1, found {} at r = {r}",
                h.value(r)
            )));
        }
    }
    let mut out = shs.clone();
    out.omega_scale = if shs.omega_scale.is_identically(1.0) {
        h
    } else {
        shs.omega_scale.clone().times(h)
    };
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlueReport {
    pub radii: Vec<f64>,
    /// Radial factor applied to the exterior omega.
    pub scaling: Vec<f64>,
    pub lambda_mismatch: f64,
    pub reeb_mismatch: f64,
    /// `sup |scaling * omega_ext - omega_int|` after scaling.
    pub omega_mismatch: f64,
    pub pass: bool,
}

/// Match exterior data on the shell `[1/2, 1]` to the interior structure.
pub fn glue_surgery(
    exterior: &FormPair,
    interior: &TorusSHS,
    samples: usize,
) -> Result<GlueReport> {
    let n = samples.max(2);
    let radii: Vec<f64> = (0..n)
        .map(|i| 0.5 + 0.5 * i as f64 / (n - 1) as f64)
        .collect();
    let int = interior.pair();
    let mut lambda_mismatch: f64 = 0.0;
    let mut slope_ext = Vec::with_capacity(n);
    let mut slope_int = Vec::with_capacity(n);
    for &r in &radii {
        let a = exterior.lambda.at(r).components;
        let b = int.lambda.at(r).components;
        for k in 0..3 {
            lambda_mismatch = lambda_mismatch.max((a[k] - b[k]).abs());
        }
        slope_ext.push(exterior.slope(r));
        slope_int.push(int.slope(r));
    }
    let slope_gap = slope_ext
        .iter()
        .zip(&slope_int)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if slope_gap > 1e-9 {
        return Err(TorusError::SlopeMismatch {
            radii,
            exterior: slope_ext,
            interior: slope_int,
        });
    }
    if lambda_mismatch > 1e-9 {
        return Err(TorusError::LambdaMismatch(lambda_mismatch));
    }
    let mut scaling = Vec::with_capacity(n);
    let mut omega_mismatch: f64 = 0.0;
    let mut reeb_mismatch: f64 = 0.0;
    for &r in &radii {
        let he = exterior.omega_scale.value(r);
        let hi = int.omega_scale.value(r);
        let we = exterior.omega.at(r).components.map(|x| x * he);
        let wi = int.omega.at(r).components.map(|x| x * hi);
        let dot: f64 = we.iter().zip(&wi).map(|(a, b)| a * b).sum();
        let nn: f64 = we.iter().map(|a| a * a).sum();
        let h = dot / nn;
        scaling.push(h);
        for k in 0..3 {
            omega_mismatch = omega_mismatch.max((h * we[k] - wi[k]).abs());
        }
        let (re, ri) = (exterior.reeb(r), int.reeb(r));
        for k in 0..3 {
            reeb_mismatch = reeb_mismatch.max((re[k] - ri[k]).abs());
        }
    }
    let pass = omega_mismatch <= 1e-10
        && reeb_mismatch <= 1e-10
        && lambda_mismatch <= 1e-10
        && scaling.iter().all(|&h| h > 0.0);
    Ok(GlueReport {
        radii,
        scaling,
        lambda_mismatch,
        reeb_mismatch,
        omega_mismatch,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationStep {
    pub t: f64,
    pub report: AxiomReport,
}

/// Axiom reports for `(omega, (1 - t) lambda1 + t lambda2)` at each `t`.
pub fn interpolate_stabilizers(
    omega: &TwoForm,
    lambda1: &OneForm,
    lambda2: &OneForm,
    ts: &[f64],
    grid: &GridSpec,
) -> Result<Vec<InterpolationStep>> {
    let tol = AxiomTolerances::default();
    for (name, l) in [("lambda1", lambda1), ("lambda2", lambda2)] {
        let rep =
            verify_shs_axioms_with(&FormPair::new(l.clone(), omega.clone()), grid, None, &tol);
        if !rep.pass {
            return Err(TorusError::Parameter(format!(
                "{name} does not stabilize omega"
            )));
        }
    }
    Ok(ts
        .iter()
        .map(|&t| {
            let lambda = if t == 0.0 {
                lambda1.clone()
            } else if t == 1.0 {
                lambda2.clone()
            } else {
                OneForm::combine(1.0 - t, lambda1, t, lambda2)
            };
            InterpolationStep {
                t,
                report: verify_shs_axioms_with(
                    &FormPair::new(lambda, omega.clone()),
                    grid,
                    None,
                    &tol,
                ),
            }
        })
        .collect())
}

pub const PROFILE_CSV_HEADER: [&str; 7] = ["r", "f", "df", "g", "dg", "s", "lambda_dlambda"];

pub fn write_profile_csv<W: std::io::Write>(
    shs: &TorusSHS,
    points: usize,
    out: W,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PROFILE_CSV_HEADER)?;
    let n = points.max(2);
    for i in 0..n {
        let r = i as f64 / (n - 1) as f64;
        let (f, g) = (shs.f.taylor(r), shs.g.taylor(r));
        let density = g.value() * f.derivative(1) - f.value() * g.derivative(1);
        w.write_record(
            [
                r,
                f.value(),
                f.derivative(1),
                g.value(),
                g.derivative(1),
                shs.s.value(r),
                density,
            ]
            .map(|x| format!("{x:e}")),
        )?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slope_example() -> RadialFn {
        RadialFn::polynomial(vec![0.1, 0.0, 1.0])
    }

    #[test]
    fn zero_slope_gives_constant_g() {
        let (_, g) = build_radial_profiles(2, 3, &RadialFn::constant(0.0), 0.25, 0.5).unwrap();
        for r in [0.0, 0.1, 0.3, 0.6, 1.0] {
            assert_eq!(g.value(r), 2.0);
        }
    }

    #[test]
    fn g_is_p_on_the_outer_shell() {
        let (_, g) = build_radial_profiles(2, 3, &slope_example(), 0.25, 0.5).unwrap();
        assert_eq!(g.value(0.75), 2.0);
    }

    #[test]
    fn unit_slope_integrates_f() {
        let (_, g) = build_radial_profiles(1, 1, &RadialFn::one(), 0.25, 0.5).unwrap();
        assert!((g.value(0.0) - 2.0).abs() < 1e-13);
    }

    #[test]
    fn rejects_odd_slope() {
        let s = RadialFn::polynomial(vec![0.0, 1.0]);
        assert!(matches!(
            build_radial_profiles(1, 1, &s, 0.25, 0.5),
            Err(TorusError::Parameter(_))
        ));
    }

    #[test]
    fn assembled_structure() {
        let shs = TorusSHS::standard(2, 3, slope_example()).unwrap();
        assert_eq!(shs.boundary, (2.0, 3.0));
        let lam = shs.lambda().at(0.7).components;
        assert_eq!(lam, [0.0, 3.0, 2.0]);
        let rep = shs.verify(&GridSpec::default());
        assert!(rep.pass, "{rep:?}");
        assert!(rep.contact_identity_max.unwrap() <= 1e-10);
        let zero = TorusSHS::standard(2, 3, RadialFn::constant(0.0)).unwrap();
        let r = zero.reeb(0.3);
        assert_eq!(r, [0.0, 0.0, 0.5]);
    }

    #[test]
    fn self_gluing_is_exact() {
        let shs = TorusSHS::standard(2, 3, slope_example()).unwrap();
        let rep = glue_surgery(&shs.pair(), &shs, 51).unwrap();
        assert!(rep.pass);
        assert_eq!(rep.omega_mismatch, 0.0);
        assert!(rep.scaling.iter().all(|&h| h == 1.0));
    }

    #[test]
    fn doubled_omega_recovers_half() {
        let shs = TorusSHS::standard(2, 3, slope_example()).unwrap();
        let mut ext = shs.pair();
        ext.omega_scale = RadialFn::constant(2.0);
        let rep = glue_surgery(&ext, &shs, 51).unwrap();
        assert!(rep.scaling.iter().all(|&h| (h - 0.5).abs() <= 1e-10));
        assert!(rep.omega_mismatch <= 1e-10);
    }

    #[test]
    fn slope_mismatch_is_refused() {
        let shs = TorusSHS::standard(2, 3, slope_example()).unwrap();
        let mut other = shs.clone();
        other.s = slope_example().plus(RadialFn::constant(1e-3));
        let out = glue_surgery(&other.pair(), &shs, 51);
        assert!(matches!(out, Err(TorusError::SlopeMismatch { .. })));
    }

    #[test]
    fn scaling_with_a_hole() {
        let shs = TorusSHS::standard(1, 1, slope_example()).unwrap();
        let h = RadialFn::smooth_step(0.1, 0.3, 0.0, 1.0);
        let scaled = scale_omega_by_radial(&shs, h).unwrap();
        let rep = scaled.verify(&GridSpec::default());
        assert!(rep.pass, "{rep:?}");
        assert!(rep.degenerate_radius_max.unwrap() <= 0.1);
        assert!(rep.omega_lambda_min.abs() <= 1e-12);
        assert!(scale_omega_by_radial(&shs, RadialFn::constant(-1.0)).is_err());
        assert!(scale_omega_by_radial(&shs, RadialFn::constant(2.0)).is_err());
    }

    #[test]
    fn stabilizer_interpolation() {
        let s = slope_example();
        let shs = TorusSHS::standard(2, 3, s.clone()).unwrap();
        let omega = shs.omega();
        let l1 = shs.lambda();
        let grid = GridSpec {
            radial: 50,
            angular: 4,
        };
        let doubled = OneForm::combine(2.0, &l1, 0.0, &l1);
        let steps = interpolate_stabilizers(&omega, &l1, &doubled, &[0.0, 0.5], &grid).unwrap();
        assert!(steps.iter().all(|st| st.report.pass));
        let base =
            crate::torus_shs::verify_shs_axioms(&FormPair::new(l1.clone(), omega.clone()), &grid);
        assert_eq!(steps[0].report, base);

        let f2 = RadialFn::Bridge {
            q: 3.0,
            r1: 0.2,
            r2: 0.45,
        };
        let g2 = RadialFn::StabilizerG {
            p: 3.0,
            f: Box::new(f2.clone()),
            s: Box::new(s),
        };
        let l2 = OneForm::new(RadialFn::constant(0.0), f2, g2);
        let ts: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let steps = interpolate_stabilizers(&omega, &l1, &l2, &ts, &grid).unwrap();
        assert_eq!(steps.len(), 11);
        for st in &steps {
            assert!(st.report.pass, "t = {}: {:?}", st.t, st.report);
        }
    }

    #[test]
    fn naive_perturbation_is_not_a_stabilizer() {
        let s = slope_example();
        let shs = TorusSHS::standard(2, 3, s).unwrap();
        let bumped = OneForm::new(
            RadialFn::constant(0.0),
            shs.f.clone(),
            shs.g
                .clone()
                .plus(RadialFn::smooth_step(0.6, 0.8, 0.5, 0.0)),
        );
        let out = interpolate_stabilizers(
            &shs.omega(),
            &shs.lambda(),
            &bumped,
            &[0.5],
            &GridSpec::default(),
        );
        assert!(matches!(out, Err(TorusError::Parameter(_))));
    }

    #[test]
    fn outer_shell_is_flat() {
        let shs = TorusSHS::standard(5, 7, slope_example()).unwrap();
        let pair = shs.pair();
        for i in 0..=10 {
            let r = 0.5 + 0.05 * i as f64;
            let v = pair.lambda.at(r);
            assert_eq!(v.components, [0.0, 7.0, 5.0]);
            assert_eq!(v.radial_derivatives, [0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn profile_csv() {
        let shs = TorusSHS::standard(1, 1, RadialFn::one()).unwrap();
        let mut buf = Vec::new();
        write_profile_csv(&shs, 11, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 12);
        assert!(text.starts_with("r,f,df,g,dg,s,lambda_dlambda"));
    }
}

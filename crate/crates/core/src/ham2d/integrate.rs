//! Adaptive Dormand-Prince integration of the flow together with its
//! variational equation, plus a fixed-step implicit Stormer-Verlet scheme
//! used as an independent cross-check.

use serde::{Deserialize, Serialize};

use super::{DynamicsError, HamiltonianSpec, Mat2, Point2, Result};

/// Which scheme advances the flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    Dopri5,
    /// Generalized (implicit) Stormer-Verlet with a fixed step, treating
    /// `y` as position and `x` as momentum.
    StormerVerlet {
        step: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_step: f64,
    pub max_time: f64,
    #[serde(default = "IntegratorConfig::default_method")]
    pub method: Method,
}

impl IntegratorConfig {
    fn default_method() -> Method {
        Method::Dopri5
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.abs_tol > 0.0
            && self.rel_tol > 0.0
            && self.max_step > 0.0
            && self.max_time > 0.0
            && self.abs_tol.is_finite()
            && self.rel_tol.is_finite();
        if !ok {
            return Err(DynamicsError::Parameter(format!(
                "integrator tolerances, max step and max time must be positive: {self:?}"
            )));
        }
        if let Method::StormerVerlet { step } = self.method {
            if !(step > 0.0) {
                return Err(DynamicsError::Parameter(format!(
                    "Stormer-Verlet step must be positive, got {step}"
                )));
            }
        }
        Ok(())
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_step: 0.25,
            max_time: 60.0,
            method: Method::Dopri5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub point: Point2,
    pub energy: f64,
    pub jacobian: Mat2,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn last(&self) -> Option<&TrajectorySample> {
        self.samples.last()
    }

    pub fn points(&self) -> impl Iterator<Item = Point2> + '_ {
        self.samples.iter().map(|s| s.point)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// End state of a flow computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowOutcome {
    pub point: Point2,
    pub jacobian: Mat2,
    pub time: f64,
    pub steps: usize,
    pub rejected: usize,
    /// `|H(end) - H(start)|`.
    pub energy_drift: f64,
}

pub(crate) type State = [f64; 6];

pub(crate) fn pack(p: Point2, j: Mat2) -> State {
    [p.x, p.y, j.0[0][0], j.0[0][1], j.0[1][0], j.0[1][1]]
}

pub(crate) fn point_of(s: &State) -> Point2 {
    Point2::new(s[0], s[1])
}

pub(crate) fn jacobian_of(s: &State) -> Mat2 {
    Mat2::new(s[2], s[3], s[4], s[5])
}

fn rhs(spec: &HamiltonianSpec, s: &State) -> Result<State> {
    let (f, d) = spec.field_and_derivative(point_of(s))?;
    let dj = d * jacobian_of(s);
    Ok([f.x, f.y, dj.0[0][0], dj.0[0][1], dj.0[1][0], dj.0[1][1]])
}

fn axpy(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for i in 0..6 {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// One Dormand-Prince step of size `h` (any sign). Returns the new state and
/// the per-component error estimate.
pub(crate) fn dopri_step(spec: &HamiltonianSpec, y: &State, h: f64) -> Result<(State, State)> {
    let k1 = rhs(spec, y)?;
    let k2 = rhs(spec, &axpy(y, h, &[(A21, &k1)]))?;
    let k3 = rhs(spec, &axpy(y, h, &[(A31, &k1), (A32, &k2)]))?;
    let k4 = rhs(spec, &axpy(y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = rhs(
        spec,
        &axpy(y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    )?;
    let k6 = rhs(
        spec,
        &axpy(
            y,
            h,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        ),
    )?;
    let y1 = axpy(
        y,
        h,
        &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
    );
    let k7 = rhs(spec, &y1)?;
    let mut err = [0.0; 6];
    for i in 0..6 {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    Ok((y1, err))
}

fn error_norm(cfg: &IntegratorConfig, y0: &State, y1: &State, err: &State) -> f64 {
    let mut acc = 0.0;
    for i in 0..6 {
        let sc = cfg.abs_tol + cfg.rel_tol * y0[i].abs().max(y1[i].abs());
        let e = err[i] / sc;
        acc += e * e;
    }
    (acc / 6.0).sqrt()
}

const MAX_STEPS: usize = 2_000_000;

/// Outcome of a single accepted step.
pub(crate) struct Accepted {
    pub t0: f64,
    pub y0: State,
    pub h: f64,
}

/// Step-by-step driver used by flows and by section crossing searches.
pub(crate) struct Stepper<'a> {
    pub spec: &'a HamiltonianSpec,
    pub cfg: &'a IntegratorConfig,
    pub dir: f64,
    pub t: f64,
    pub y: State,
    h: f64,
    pub steps: usize,
    pub rejected: usize,
    pub samples: Vec<TrajectorySample>,
    record: bool,
}

impl<'a> Stepper<'a> {
    pub fn new(
        spec: &'a HamiltonianSpec,
        cfg: &'a IntegratorConfig,
        p0: Point2,
        dir: f64,
        record: bool,
    ) -> Result<Self> {
        cfg.validate()?;
        if !p0.is_finite() {
            return Err(DynamicsError::BadStart(format!(
                "non-finite start point ({}, {})",
                p0.x, p0.y
            )));
        }
        let y = pack(p0, Mat2::IDENTITY);
        let mut s = Self {
            spec,
            cfg,
            dir: if dir < 0.0 { -1.0 } else { 1.0 },
            t: 0.0,
            y,
            h: (0.01_f64).min(cfg.max_step),
            steps: 0,
            rejected: 0,
            samples: Vec::new(),
            record,
        };
        if record {
            s.push_sample()?;
        }
        Ok(s)
    }

    /// Cap the first trial step, for starts where events happen quickly.
    pub fn with_initial_step(mut self, h: f64) -> Self {
        if h > 0.0 {
            self.h = self.h.min(h);
        }
        self
    }

    fn push_sample(&mut self) -> Result<()> {
        let p = point_of(&self.y);
        let energy = self.spec.value(p)?;
        self.samples.push(TrajectorySample {
            t: self.t,
            point: p,
            energy,
            jacobian: jacobian_of(&self.y),
        });
        Ok(())
    }

    fn failure(&self, reason: String) -> DynamicsError {
        let mut partial = Trajectory {
            samples: self.samples.clone(),
        };
        if partial.samples.is_empty() || partial.samples.last().map(|s| s.t) != Some(self.t) {
            if let Ok(energy) = self.spec.value(point_of(&self.y)) {
                partial.samples.push(TrajectorySample {
                    t: self.t,
                    point: point_of(&self.y),
                    energy,
                    jacobian: jacobian_of(&self.y),
                });
            }
        }
        DynamicsError::IntegrationFailure {
            t: self.t,
            reason,
            partial: Box::new(partial),
        }
    }

    /// Take one accepted step, not passing `|t| = limit`.
    pub fn step(&mut self, limit: f64) -> Result<Accepted> {
        let remaining = limit - self.t.abs();
        loop {
            if self.steps + self.rejected >= MAX_STEPS {
                return Err(self.failure("step budget exhausted".into()));
            }
            let mut h = self.h.min(self.cfg.max_step).min(remaining);
            let last = h >= remaining;
            if last {
                h = remaining;
            }
            let floor = 1e-14 * self.t.abs().max(1.0);
            if h < floor && !last {
                return Err(self.failure(format!("step size underflow (h = {h:e})")));
            }
            let signed = self.dir * h;
            let trial = dopri_step(self.spec, &self.y, signed);
            let (y1, err) = match trial {
                Ok(v) => v,
                Err(e @ DynamicsError::Domain { .. }) => {
                    // Shrink into the domain; give up once the step is tiny.
                    if h < floor * 1e3 {
                        return Err(e);
                    }
                    self.h = h * 0.25;
                    self.rejected += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let en = error_norm(self.cfg, &self.y, &y1, &err);
            if !en.is_finite() || y1.iter().any(|v| !v.is_finite()) {
                self.h = h * 0.2;
                self.rejected += 1;
                continue;
            }
            let factor = if en == 0.0 {
                5.0
            } else {
                (0.9 * en.powf(-0.2)).clamp(0.2, 5.0)
            };
            if en <= 1.0 {
                let acc = Accepted {
                    t0: self.t,
                    y0: self.y,
                    h: signed,
                };
                self.y = y1;
                self.t = if last {
                    self.dir * limit
                } else {
                    self.t + signed
                };
                self.steps += 1;
                if !last || factor > 1.0 {
                    self.h = h * factor;
                }
                if self.record {
                    self.push_sample()?;
                }
                return Ok(acc);
            }
            self.h = h * factor.min(1.0);
            self.rejected += 1;
        }
    }
}

fn check_time(t: f64, cfg: &IntegratorConfig) -> Result<()> {
    if !t.is_finite() || t.abs() > cfg.max_time {
        return Err(DynamicsError::Parameter(format!(
            "|t| = {} exceeds max time {}",
            t.abs(),
            cfg.max_time
        )));
    }
    Ok(())
}

fn run(
    spec: &HamiltonianSpec,
    p0: Point2,
    t: f64,
    cfg: &IntegratorConfig,
    record: bool,
) -> Result<(FlowOutcome, Trajectory)> {
    check_time(t, cfg)?;
    let h0 = spec.value(p0)?;
    match cfg.method {
        Method::Dopri5 => {
            let mut st = Stepper::new(spec, cfg, p0, t, record)?;
            while st.t.abs() < t.abs() {
                st.step(t.abs())?;
            }
            let point = point_of(&st.y);
            let out = FlowOutcome {
                point,
                jacobian: jacobian_of(&st.y),
                time: t,
                steps: st.steps,
                rejected: st.rejected,
                energy_drift: (spec.value(point)? - h0).abs(),
            };
            Ok((
                out,
                Trajectory {
                    samples: st.samples,
                },
            ))
        }
        Method::StormerVerlet { step } => verlet(spec, p0, t, cfg, step, record, h0),
    }
}

/// Time-`t` map `f_t(p0)`.
pub fn flow(spec: &HamiltonianSpec, p0: Point2, t: f64, cfg: &IntegratorConfig) -> Result<Point2> {
    Ok(run(spec, p0, t, cfg, false)?.0.point)
}

/// Derivative `D f_t(p0)` from the variational equation.
pub fn flow_jacobian(
    spec: &HamiltonianSpec,
    p0: Point2,
    t: f64,
    cfg: &IntegratorConfig,
) -> Result<Mat2> {
    Ok(run(spec, p0, t, cfg, false)?.0.jacobian)
}

pub fn flow_with_jacobian(
    spec: &HamiltonianSpec,
    p0: Point2,
    t: f64,
    cfg: &IntegratorConfig,
) -> Result<FlowOutcome> {
    Ok(run(spec, p0, t, cfg, false)?.0)
}

/// The flow with every accepted step recorded.
pub fn trajectory(
    spec: &HamiltonianSpec,
    p0: Point2,
    t: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    Ok(run(spec, p0, t, cfg, true)?.1)
}

const NEWTON_TOL: f64 = 1e-15;
const NEWTON_ITERS: usize = 50;

/// Scalar Newton solve used by the implicit stages.
fn solve_scalar(mut z: f64, f: impl Fn(f64) -> Result<(f64, f64)>) -> Result<f64> {
    for _ in 0..NEWTON_ITERS {
        let (r, dr) = f(z)?;
        if dr == 0.0 || !dr.is_finite() {
            break;
        }
        let dz = r / dr;
        z -= dz;
        if dz.abs() <= NEWTON_TOL * z.abs().max(1e-300) || dz == 0.0 {
            return Ok(z);
        }
    }
    let (r, _) = f(z)?;
    if r.abs() < 1e-13 * z.abs().max(1e-12) {
        Ok(z)
    } else {
        Err(DynamicsError::Parameter(format!(
            "implicit Stormer-Verlet stage did not converge (residual {r:e})"
        )))
    }
}

// Momentum p = x, position q = y, so that q' = H_p and p' = -H_q.
fn verlet(
    spec: &HamiltonianSpec,
    p0: Point2,
    t: f64,
    cfg: &IntegratorConfig,
    step: f64,
    record: bool,
    h0: f64,
) -> Result<(FlowOutcome, Trajectory)> {
    cfg.validate()?;
    let n = (t.abs() / step)
        .ceil()
        .max(if t == 0.0 { 0.0 } else { 1.0 }) as usize;
    let h = if n == 0 { 0.0 } else { t / n as f64 };
    let half = 0.5 * h;
    let (mut p, mut q) = (p0.x, p0.y);
    let mut jac = Mat2::IDENTITY;
    let mut traj = Trajectory::default();
    let sample = |time: f64, p: f64, q: f64, j: Mat2, traj: &mut Trajectory| -> Result<()> {
        if record {
            let pt = Point2::new(p, q);
            traj.samples.push(TrajectorySample {
                t: time,
                point: pt,
                energy: spec.value(pt)?,
                jacobian: j,
            });
        }
        Ok(())
    };
    sample(0.0, p, q, jac, &mut traj)?;
    let jet = |p: f64, q: f64| spec.jet(p, q);
    for i in 0..n {
        // Stage 1: P = p - h/2 H_q(q, P).
        let pm = solve_scalar(p, |z| {
            let j = jet(z, q)?;
            Ok((z - p + half * j.g[1], 1.0 + half * j.h[1][0]))
        })?;
        let j1 = jet(pm, q)?;
        // Stage 2: Q = q + h/2 (H_p(q, P) + H_p(Q, P)).
        let hp_q = j1.g[0];
        let qn = solve_scalar(q + h * hp_q, |z| {
            let j = jet(pm, z)?;
            Ok((z - q - half * (hp_q + j.g[0]), 1.0 - half * j.h[0][1]))
        })?;
        let j2 = jet(pm, qn)?;
        let pn = pm - half * j2.g[1];

        // Tangent map, column by column; h[0][0] = H_pp, h[1][1] = H_qq,
        // h[0][1] = H_pq, all in (x, y) = (p, q) order.
        let mut cols = [[0.0; 2]; 2];
        for (c, col) in cols.iter_mut().enumerate() {
            let dp = jac.0[0][c];
            let dq = jac.0[1][c];
            let d_pm = (dp - half * j1.h[1][1] * dq) / (1.0 + half * j1.h[1][0]);
            let d_qn = (dq + half * (j1.h[0][1] * dq + j1.h[0][0] * d_pm + j2.h[0][0] * d_pm))
                / (1.0 - half * j2.h[0][1]);
            let d_pn = d_pm - half * (j2.h[1][1] * d_qn + j2.h[1][0] * d_pm);
            *col = [d_pn, d_qn];
        }
        jac = Mat2::new(cols[0][0], cols[1][0], cols[0][1], cols[1][1]);
        p = pn;
        q = qn;
        sample((i + 1) as f64 * h, p, q, jac, &mut traj)?;
    }
    let point = Point2::new(p, q);
    Ok((
        FlowOutcome {
            point,
            jacobian: jac,
            time: t,
            steps: n,
            rejected: 0,
            energy_drift: (spec.value(point)? - h0).abs(),
        },
        traj,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closed_form(p: Point2, t: f64) -> Point2 {
        let m = Mat2::hyperbolic(t);
        let v = m.apply(p.to_array());
        Point2::new(v[0], v[1])
    }

    #[test]
    fn quad_flow_matches_matrix_exponential() {
        let spec = HamiltonianSpec::QuadSaddle;
        let cfg = IntegratorConfig::default();
        for &t in &[0.3, 1.0, 2.5, -1.7] {
            let p0 = Point2::new(0.3, -0.8);
            let out = flow_with_jacobian(&spec, p0, t, &cfg).unwrap();
            assert!(out.point.dist(closed_form(p0, t)) < 1e-10);
            assert!(out.jacobian.max_abs_diff(&Mat2::hyperbolic(t)) < 1e-9);
        }
        let p = flow(&spec, Point2::new(1.0, 0.0), 1.0, &cfg).unwrap();
        assert!(p.dist(Point2::new(1f64.cosh(), 1f64.sinh())) < 1e-12);
    }

    #[test]
    fn zero_time_is_identity() {
        let spec = HamiltonianSpec::blowup(1.0, 0.05);
        let cfg = IntegratorConfig::default();
        let p0 = Point2::new(0.01, 0.02);
        let out = flow_with_jacobian(&spec, p0, 0.0, &cfg).unwrap();
        assert_eq!(out.point, p0);
        assert_eq!(out.jacobian, Mat2::IDENTITY);
    }

    #[test]
    fn rejects_time_beyond_limit() {
        let cfg = IntegratorConfig::default();
        assert!(matches!(
            flow(&HamiltonianSpec::QuadSaddle, Point2::ORIGIN, 100.0, &cfg),
            Err(DynamicsError::Parameter(_))
        ));
    }

    #[test]
    fn verlet_agrees_with_dopri() {
        let spec = HamiltonianSpec::blowup(-1.0, 0.2);
        let base = IntegratorConfig::default();
        let sv = base.with_method(Method::StormerVerlet { step: 1e-3 });
        let p0 = Point2::new(0.15, 0.05);
        let a = flow_with_jacobian(&spec, p0, 2.0, &base).unwrap();
        let b = flow_with_jacobian(&spec, p0, 2.0, &sv).unwrap();
        assert!(a.point.dist(b.point) < 1e-5, "{:?} {:?}", a.point, b.point);
        assert!(a.jacobian.max_abs_diff(&b.jacobian) < 1e-4);
        assert!((b.jacobian.det() - 1.0).abs() < 1e-10);
        assert!(b.energy_drift < 1e-6);
    }

    #[test]
    fn trajectory_records_every_step() {
        let spec = HamiltonianSpec::QuadSaddle;
        let cfg = IntegratorConfig::default();
        let tr = trajectory(&spec, Point2::new(0.5, 0.1), 2.0, &cfg).unwrap();
        assert!(tr.len() > 2);
        assert_eq!(tr.samples[0].t, 0.0);
        assert!((tr.last().unwrap().t - 2.0).abs() < 1e-15);
        for w in tr.samples.windows(2) {
            assert!(w[1].t > w[0].t);
        }
    }

    #[test]
    fn backward_flow_inverts_forward_flow() {
        let spec = HamiltonianSpec::blowup(1.0, 0.1);
        let cfg = IntegratorConfig::default();
        let p0 = Point2::new(0.08, -0.03);
        let p1 = flow(&spec, p0, 3.0, &cfg).unwrap();
        let back = flow(&spec, p1, -3.0, &cfg).unwrap();
        assert!(back.dist(p0) < 1e-9);
    }
}

//! Planar Hamiltonian dynamics.
//!
//! Hamiltonians are evaluated exactly (value, gradient and Hessian) through
//! [`crate::jet::Jet2`]. The vector field is `X = (-dH/dy, dH/dx)`, so the
//! quadratic saddle `(x^2 - y^2)/2` generates the linear flow
//! `exp(t [[0, 1], [1, 0]])`.

mod export;
pub(crate) mod integrate;
pub(crate) mod section;
mod spec;

pub use export::{write_trajectory_csv, TRAJECTORY_CSV_HEADER};
pub use integrate::{
    flow, flow_jacobian, flow_with_jacobian, trajectory, FlowOutcome, IntegratorConfig, Method,
    Trajectory, TrajectorySample,
};
pub use section::{return_map, CrossingDirection, ReturnOutcome, SectionSpec};
pub use spec::{bump_profile, BlowupParams, Bump, BumpParams, HamiltonianSpec, Normalization};

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};
use thiserror::Error;

/// A point of the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn polar(radius: f64, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(radius * c, radius * s)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn dist(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.x, self.y]
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

/// Row-major 2x2 real matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Mat2::new(c, -s, s, c)
    }

    pub fn diag(a: f64, d: f64) -> Self {
        Mat2::new(a, 0.0, 0.0, d)
    }

    /// `exp(t [[0, 1], [1, 0]])`, the linear saddle flow.
    pub fn hyperbolic(t: f64) -> Self {
        Mat2::new(t.cosh(), t.sinh(), t.sinh(), t.cosh())
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        let m = &self.0;
        Some(Mat2::new(
            m[1][1] / d,
            -m[0][1] / d,
            -m[1][0] / d,
            m[0][0] / d,
        ))
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        ]
    }

    pub fn column(&self, j: usize) -> [f64; 2] {
        [self.0[0][j], self.0[1][j]]
    }

    pub fn max_abs_diff(&self, o: &Mat2) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                m = m.max((self.0[i][j] - o.0[i][j]).abs());
            }
        }
        m
    }

    /// Operator 2-norm (largest singular value).
    pub fn norm(&self) -> f64 {
        let m = &self.0;
        let a = m[0][0] * m[0][0] + m[1][0] * m[1][0];
        let b = m[0][0] * m[0][1] + m[1][0] * m[1][1];
        let d = m[0][1] * m[0][1] + m[1][1] * m[1][1];
        let tr = a + d;
        let disc = ((a - d) * (a - d) + 4.0 * b * b).sqrt();
        (0.5 * (tr + disc)).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let a = &self.0;
        let b = &o.0;
        let mut c = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2(c)
    }
}

/// Failures of planar dynamics operations.
#[derive(Debug, Error, Clone)]
pub enum DynamicsError {
    #[error("point ({x}, {y}) is outside the domain of the Hamiltonian: {reason}")]
    Domain { x: f64, y: f64, reason: String },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("integration failed at t = {t}: {reason}")]
    IntegrationFailure {
        t: f64,
        reason: String,
        partial: Box<Trajectory>,
    },

    #[error("no return to the section from ({}, {}) within t = {elapsed}", start.x, start.y)]
    NoReturn {
        start: Point2,
        elapsed: f64,
        last: Point2,
    },

    #[error("tangential crossing of the section at ({}, {}), t = {t}", point.x, point.y)]
    TangentialCrossing { point: Point2, t: f64 },

    #[error("start point violates the section precondition: {0}")]
    BadStart(String),

    #[error("symmetry requirement violated: {0}")]
    Symmetry(String),
}

pub type Result<T, E = DynamicsError> = std::result::Result<T, E>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hyperbolic_matrix_has_unit_determinant() {
        for &t in &[0.0, 0.5, 2.0, 5.0] {
            assert!((Mat2::hyperbolic(t).det() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn matrix_norm_of_diagonal() {
        assert!((Mat2::diag(3.0, -0.5).norm() - 3.0).abs() < 1e-14);
        assert!((Mat2::rotation(0.7).norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn inverse_roundtrip() {
        let m = Mat2::new(2.0, 1.0, 1.0, 1.0);
        let p = m * m.inverse().unwrap();
        assert!(p.max_abs_diff(&Mat2::IDENTITY) < 1e-15);
        assert!(Mat2::new(1.0, 2.0, 2.0, 4.0).inverse().is_none());
    }
}

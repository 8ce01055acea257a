use serde::{Deserialize, Serialize};

use crate::ham2d::{DynamicsError, HamiltonianSpec, Mat2, Point2, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedPointType {
    Hyperbolic,
    Elliptic,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub location: Point2,
    #[serde(rename = "type")]
    pub kind: FixedPointType,
    /// Eigenvalues of `DX` as `(re, im)` pairs.
    pub eigenvalues: [(f64, f64); 2],
    pub hessian_det: f64,
    /// `|X(location)|`.
    pub residual: f64,
}

/// Axis-aligned search box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub min: Point2,
    pub max: Point2,
}

impl SearchBox {
    pub fn centered(half_width: f64) -> Self {
        Self {
            min: Point2::new(-half_width, -half_width),
            max: Point2::new(half_width, half_width),
        }
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    fn scale(&self) -> f64 {
        (self.max.x - self.min.x).max(self.max.y - self.min.y)
    }
}

/// A grid cell in which both gradient components change sign but no
/// zero was found.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlaggedCell {
    pub min: Point2,
    pub max: Point2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointCensus {
    pub points: Vec<FixedPoint>,
    pub flagged_cells: Vec<FlaggedCell>,
}

impl FixedPointCensus {
    pub fn count(&self, kind: FixedPointType) -> usize {
        self.points.iter().filter(|p| p.kind == kind).count()
    }

    pub fn of_type(&self, kind: FixedPointType) -> Vec<FixedPoint> {
        self.points
            .iter()
            .copied()
            .filter(|p| p.kind == kind)
            .collect()
    }
}

pub const DEDUP_RADIUS: f64 = 1e-6;
const RESIDUAL_TOL: f64 = 1e-10;
const MAX_NEWTON: usize = 400;

fn newton(spec: &HamiltonianSpec, seed: Point2, scale: f64) -> Option<Point2> {
    let mut p = seed;
    for _ in 0..MAX_NEWTON {
        let j = spec.jet(p.x, p.y).ok()?;
        if j.g == [0.0, 0.0] {
            return Some(p);
        }
        let step = Mat2(j.h).inverse()?.apply(j.g);
        let next = Point2::new(p.x - step[0], p.y - step[1]);
        if !next.is_finite() || next.dist(seed) > 4.0 * scale {
            return None;
        }
        p = next;
        if step[0].hypot(step[1]) < 1e-14 * scale.max(1e-300) {
            break;
        }
    }
    let g = spec.gradient(p).ok()?;
    (g[0].hypot(g[1]) <= RESIDUAL_TOL).then_some(p)
}

/// Relative threshold on `|det Hess|` below which a zero counts as degenerate.
const DEGENERATE_DET: f64 = 1e-9;

pub fn classify_fixed_point(spec: &HamiltonianSpec, p: Point2) -> Result<FixedPoint> {
    let j = spec.jet(p.x, p.y)?;
    let h = Mat2(j.h);
    let det = h.det();
    let scale = h.norm().max(1.0);
    // DX = J Hess has trace 0 and determinant det Hess.
    let (kind, eigenvalues) = if det.abs() <= DEGENERATE_DET * scale * scale {
        (FixedPointType::Degenerate, [(0.0, 0.0), (0.0, 0.0)])
    } else if det < 0.0 {
        let l = (-det).sqrt();
        (FixedPointType::Hyperbolic, [(l, 0.0), (-l, 0.0)])
    } else {
        let w = det.sqrt();
        (FixedPointType::Elliptic, [(0.0, w), (0.0, -w)])
    };
    Ok(FixedPoint {
        location: p,
        kind,
        eigenvalues,
        hessian_det: det,
        residual: j.g[0].hypot(j.g[1]),
    })
}

/// Zeros of the field from Newton iteration seeded on a `density x density`
/// grid over `search`, deduplicated and classified.
pub fn find_fixed_points(
    spec: &HamiltonianSpec,
    search: SearchBox,
    density: usize,
) -> Result<FixedPointCensus> {
    spec.validate()?;
    if density < 2 || !(search.max.x > search.min.x && search.max.y > search.min.y) {
        return Err(DynamicsError::Parameter(
            "fixed point search needs a nonempty box and grid density >= 2".into(),
        ));
    }
    let scale = search.scale();
    let n = density;
    let node = |i: usize, j: usize| {
        Point2::new(
            search.min.x + (search.max.x - search.min.x) * i as f64 / (n - 1) as f64,
            search.min.y + (search.max.y - search.min.y) * j as f64 / (n - 1) as f64,
        )
    };
    let mut roots: Vec<Point2> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if let Some(r) = newton(spec, node(i, j), scale) {
                if search.contains(r) && roots.iter().all(|q| q.dist(r) > DEDUP_RADIUS) {
                    roots.push(r);
                }
            }
        }
    }
    roots.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    let points = roots
        .iter()
        .map(|&r| classify_fixed_point(spec, r))
        .collect::<Result<Vec<_>>>()?;

    let mut grads = vec![[0.0; 2]; n * n];
    for i in 0..n {
        for j in 0..n {
            grads[i * n + j] = spec.gradient(node(i, j))?;
        }
    }
    let mut flagged_cells = Vec::new();
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            let corners = [
                grads[i * n + j],
                grads[(i + 1) * n + j],
                grads[i * n + j + 1],
                grads[(i + 1) * n + j + 1],
            ];
            let changes =
                |k: usize| corners.iter().any(|g| g[k] < 0.0) && corners.iter().any(|g| g[k] > 0.0);
            if !(changes(0) && changes(1)) {
                continue;
            }
            let (lo, hi) = (node(i, j), node(i + 1, j + 1));
            let pad = 1e-9 * scale;
            let found = roots.iter().any(|r| {
                r.x >= lo.x - pad && r.x <= hi.x + pad && r.y >= lo.y - pad && r.y <= hi.y + pad
            });
            if !found {
                flagged_cells.push(FlaggedCell { min: lo, max: hi });
            }
        }
    }
    Ok(FixedPointCensus {
        points,
        flagged_cells,
    })
}

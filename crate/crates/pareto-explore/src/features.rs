//! RBF feature construction over a fixed hinge-point lattice, plus the
//! convex-hull machinery used to keep only the locally relevant hinges.
//!
//! Hinges are laid out once over the whole map. Each mapping update builds a
//! convex hull over the scan's training points, enlarges it slightly, and
//! keeps only the hinges inside; features are then RBF activations
//! `exp(-gamma * d^2)` against that active subset.

use crate::error::{Error, Result};
use crate::geom::{orient, Grid2, Point2, Rect};

/// Activations smaller than this are dropped from feature vectors. The
/// induced error is far below every tolerance used in the test suite, and
/// it keeps per-point work proportional to the hinges actually in range.
pub const SPARSITY_CUTOFF: f64 = 1e-6;

/// Fixed lattice of hinge positions covering the map bounds.
#[derive(Debug, Clone)]
pub struct HingeGrid {
    grid: Grid2,
    points: Vec<Point2>,
}

impl HingeGrid {
    /// Lays hinges on a row-major lattice anchored at `bounds.min`; the last
    /// row/column sits at or past the far edge so the bounds are covered.
    pub fn build(bounds: Rect, resolution: f64) -> Result<Self> {
        let grid = Grid2::covering(bounds, resolution)?;
        let points = grid.points().collect();
        Ok(Self { grid, points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, index: usize) -> Point2 {
        self.points[index]
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn grid(&self) -> &Grid2 {
        &self.grid
    }

    pub fn resolution(&self) -> f64 {
        self.grid.resolution
    }
}

/// Sparse RBF feature vector: activations against a subset of hinges.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    /// Hinge indices with non-negligible activation, in input order.
    pub active_indices: Vec<usize>,
    /// Matching activations, each in (cutoff, 1].
    pub values: Vec<f64>,
}

/// Single RBF activation `exp(-gamma * |x - hinge|^2)`.
pub fn rbf(x: Point2, hinge: Point2, gamma: f64) -> f64 {
    (-gamma * x.dist2(hinge)).exp()
}

/// Evaluates RBF activations of `x` against the given hinge subset,
/// dropping entries below [`SPARSITY_CUTOFF`]. Order follows `active`.
pub fn rbf_features(
    x: Point2,
    hinges: &HingeGrid,
    active: &[usize],
    gamma: f64,
) -> Result<FeatureVector> {
    if active.is_empty() {
        return Err(Error::EmptyActiveSet);
    }
    debug_assert!(gamma > 0.0);
    let mut active_indices = Vec::new();
    let mut values = Vec::new();
    for &idx in active {
        let v = rbf(x, hinges.point(idx), gamma);
        if v >= SPARSITY_CUTOFF {
            active_indices.push(idx);
            values.push(v);
        }
    }
    Ok(FeatureVector { active_indices, values })
}

/// Convex hull of `points` by monotone chain: CCW vertex order, collinear
/// boundary points excluded. Errors when everything is collinear, which the
/// caller treats as a degenerate scan and replaces with a disk-shaped hull.
pub fn convex_hull(points: &[Point2]) -> Result<Vec<Point2>> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup_by(|a, b| a.x == b.x && a.y == b.y);
    if pts.len() < 3 {
        return Err(Error::DegenerateHull);
    }
    let mut hull: Vec<Point2> = Vec::with_capacity(2 * pts.len());
    let chain = |hull: &mut Vec<Point2>, base: usize, p: Point2| {
        while hull.len() >= base + 2
            && orient(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
        {
            hull.pop();
        }
        hull.push(p);
    };
    for &p in &pts {
        chain(&mut hull, 0, p);
    }
    let lower_len = hull.len();
    for &p in pts.iter().rev().skip(1) {
        chain(&mut hull, lower_len - 1, p);
    }
    hull.pop();
    if hull.len() < 3 {
        return Err(Error::DegenerateHull);
    }
    Ok(hull)
}

/// Inclusive point-in-convex-polygon test: `p` on the boundary counts as
/// inside. `hull` must be in CCW order.
pub fn hull_contains(hull: &[Point2], p: Point2) -> bool {
    let n = hull.len();
    (0..n).all(|k| orient(hull[k], hull[(k + 1) % n], p) >= 0.0)
}

fn is_convex_ccw(poly: &[Point2]) -> bool {
    let n = poly.len();
    (0..n).all(|k| orient(poly[k], poly[(k + 1) % n], poly[(k + 2) % n]) >= 0.0)
}

/// Pushes every vertex `margin` meters radially away from the vertex
/// centroid. The offset polygon can lose convexity for lopsided inputs, so
/// the result is re-hulled when that happens.
pub fn enlarge_hull(hull: &[Point2], margin: f64) -> Vec<Point2> {
    debug_assert!(margin >= 0.0);
    if margin == 0.0 {
        return hull.to_vec();
    }
    let inv = 1.0 / hull.len() as f64;
    let centroid = hull.iter().fold(Point2::default(), |acc, &v| acc + v) * inv;
    let moved: Vec<Point2> = hull
        .iter()
        .map(|&v| {
            let d = v - centroid;
            let r = d.norm();
            if r > 0.0 {
                v + d * (margin / r)
            } else {
                v
            }
        })
        .collect();
    if is_convex_ccw(&moved) {
        moved
    } else {
        convex_hull(&moved).expect("radial offset of a valid hull cannot collapse to a line")
    }
}

/// Indices of hinges inside or on the hull, ascending.
pub fn select_hinges(hull: &[Point2], hinges: &HingeGrid) -> Vec<usize> {
    hinges
        .points()
        .iter()
        .enumerate()
        .filter(|(_, &p)| hull_contains(hull, p))
        .map(|(idx, _)| idx)
        .collect()
}

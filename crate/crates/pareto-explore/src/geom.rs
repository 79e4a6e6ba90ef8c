//! Shared planar geometry: points, axis-aligned bounds, and the lattice
//! grid used by both the hinge layout and the occupancy query layers.

use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

/// A point (or vector) in the world plane, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the cross product, treating both as 2D vectors.
    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn dist2(self, other: Point2) -> f64 {
        let d = self - other;
        d.dot(d)
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.y * k)
    }
}

/// Signed area of the triangle (a, b, c); positive when c lies left of a->b.
pub fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

/// Axis-aligned rectangle in world coordinates, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min: Point2,
    pub max: Point2,
}

impl Rect {
    pub fn new(min: Point2, max: Point2) -> Self {
        Self { min, max }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn is_degenerate(&self) -> bool {
        self.width() <= 0.0 || self.height() <= 0.0
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(theta: f64) -> f64 {
    use std::f64::consts::PI;
    let w = PI - (PI - theta).rem_euclid(2.0 * PI);
    debug_assert!(w > -PI - 1e-9 && w <= PI + 1e-9);
    w
}

/// A regular lattice of points: `point(i, j) = origin + (i*res, j*res)`,
/// stored row-major (`index = j*nx + i`). Both the hinge layout and the
/// occupancy query grid are lattices of this kind.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2 {
    pub origin: Point2,
    pub resolution: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Grid2 {
    /// Builds the smallest lattice anchored at `bounds.min` that covers
    /// `bounds` inclusively: the last row/column sits at or past the far edge.
    pub fn covering(bounds: Rect, resolution: f64) -> Result<Self> {
        if resolution <= 0.0 || !resolution.is_finite() {
            return Err(Error::NonPositive { what: "resolution", value: resolution });
        }
        if bounds.is_degenerate() {
            return Err(Error::EmptyBounds);
        }
        // Lattice points per axis: intervals + 1. The -1e-9 guard keeps
        // exact multiples (e.g. 1.0 / 0.2) from gaining a spurious extra row.
        let points = |span: f64| ((span / resolution) - 1e-9).ceil().max(0.0) as usize + 1;
        let nx = points(bounds.width());
        let ny = points(bounds.height());
        Ok(Self { origin: bounds.min, resolution, nx, ny })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    pub fn point(&self, i: usize, j: usize) -> Point2 {
        Point2::new(
            self.origin.x + i as f64 * self.resolution,
            self.origin.y + j as f64 * self.resolution,
        )
    }

    /// Iterates all lattice points in storage order.
    pub fn points(&self) -> impl Iterator<Item = Point2> + '_ {
        (0..self.ny).flat_map(move |j| (0..self.nx).map(move |i| self.point(i, j)))
    }

    /// World extent spanned by the lattice (first to last point).
    pub fn extent(&self) -> Rect {
        Rect::new(self.origin, self.point(self.nx - 1, self.ny - 1))
    }

    pub fn contains_pos(&self, p: Point2) -> bool {
        self.extent().contains(p)
    }

    /// Maps a world position to the lattice point it coincides with, within
    /// `tol` meters. Used by callers whose inputs must lie on the grid.
    pub fn snap(&self, p: Point2, tol: f64) -> Option<(usize, usize)> {
        let u = (p.x - self.origin.x) / self.resolution;
        let v = (p.y - self.origin.y) / self.resolution;
        let i = u.round();
        let j = v.round();
        if i < 0.0 || j < 0.0 || i as usize >= self.nx || j as usize >= self.ny {
            return None;
        }
        let snapped = self.point(i as usize, j as usize);
        if (snapped.x - p.x).abs() <= tol && (snapped.y - p.y).abs() <= tol {
            Some((i as usize, j as usize))
        } else {
            None
        }
    }

    /// Bilinear interpolation of a row-major value layer at `p`.
    /// Returns `None` outside the lattice extent.
    pub fn bilinear(&self, values: &[f64], p: Point2) -> Option<f64> {
        debug_assert_eq!(values.len(), self.len());
        if !self.contains_pos(p) {
            return None;
        }
        let u = (p.x - self.origin.x) / self.resolution;
        let v = (p.y - self.origin.y) / self.resolution;
        let i0 = (u.floor() as usize).min(self.nx - 2);
        let j0 = (v.floor() as usize).min(self.ny - 2);
        let fx = u - i0 as f64;
        let fy = v - j0 as f64;
        let v00 = values[self.index(i0, j0)];
        let v10 = values[self.index(i0 + 1, j0)];
        let v01 = values[self.index(i0, j0 + 1)];
        let v11 = values[self.index(i0 + 1, j0 + 1)];
        Some(
            v00 * (1.0 - fx) * (1.0 - fy)
                + v10 * fx * (1.0 - fy)
                + v01 * (1.0 - fx) * fy
                + v11 * fx * fy,
        )
    }
}

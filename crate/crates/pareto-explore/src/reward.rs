//! The two planning objectives, built as per-cell layers on the query
//! grid: occupancy entropy (information still missing) and frontier
//! dynamics (how much each cell's estimate moved between consecutive
//! maps). Rewards anywhere in the plane come from bilinear interpolation
//! of those layers.

use crate::error::{Error, Result};
use crate::geom::{Grid2, Point2};

/// Binary entropy in nats, with H(0) = H(1) = 0 by continuous extension.
///
/// The operands are canonicalized so that H(p) and H(1-p) — the latter
/// computed in floating point — are bitwise identical: `1 - p` is exact
/// for p >= 0.5, so both arguments reduce to the same (a, b) pair.
pub fn entropy(p: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p));
    let a = p.max(1.0 - p);
    let b = 1.0 - a;
    if b == 0.0 {
        return 0.0;
    }
    -a * a.ln() - b * b.ln()
}

/// Per-cell binary entropy of an occupancy layer.
pub fn entropy_map(p: &[f64]) -> Vec<f64> {
    p.iter().map(|&v| entropy(v)).collect()
}

/// Per-cell absolute change between two consecutive occupancy layers.
pub fn frontier_dynamics(prev_p: &[f64], curr_p: &[f64]) -> Result<Vec<f64>> {
    if prev_p.len() != curr_p.len() {
        return Err(Error::GridMismatch(format!(
            "dynamics layers of {} and {} cells",
            prev_p.len(),
            curr_p.len()
        )));
    }
    Ok(prev_p.iter().zip(curr_p).map(|(a, b)| (b - a).abs()).collect())
}

/// Number of objectives the planner optimizes.
pub const N_OBJECTIVES: usize = 2;

/// Reward vector: `[entropy, dynamics]`, in that order everywhere.
pub type RewardVec = [f64; N_OBJECTIVES];

/// Occupancy, entropy, and dynamics layers sharing one query grid.
/// Immutable once built; many rollouts read it concurrently.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyField {
    grid: Grid2,
    p: Vec<f64>,
    h: Vec<f64>,
    d: Vec<f64>,
}

impl OccupancyField {
    /// Builds the field from the current occupancy layer. With no previous
    /// layer (the very first map) the dynamics layer is all zeros.
    pub fn new(grid: Grid2, p: Vec<f64>, prev_p: Option<&[f64]>) -> Result<Self> {
        if p.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} cells for a {}x{} grid",
                p.len(),
                grid.nx,
                grid.ny
            )));
        }
        let h = entropy_map(&p);
        let d = match prev_p {
            Some(prev) => frontier_dynamics(prev, &p)?,
            None => vec![0.0; p.len()],
        };
        Ok(Self { grid, p, h, d })
    }

    pub fn grid(&self) -> &Grid2 {
        &self.grid
    }

    pub fn occupancy(&self) -> &[f64] {
        &self.p
    }

    pub fn entropy_layer(&self) -> &[f64] {
        &self.h
    }

    pub fn dynamics_layer(&self) -> &[f64] {
        &self.d
    }

    /// Bilinear occupancy at `pos`; `None` outside the grid. This is what
    /// the collision filter consumes.
    pub fn occupancy_at(&self, pos: Point2) -> Option<f64> {
        self.grid.bilinear(&self.p, pos)
    }

    /// Reward vector at `pos` plus an in-bounds flag. Out-of-grid
    /// positions yield `([0, 0], false)`; the planner treats them as
    /// terminal rather than rewarding.
    pub fn reward_at(&self, pos: Point2) -> (RewardVec, bool) {
        match (self.grid.bilinear(&self.h, pos), self.grid.bilinear(&self.d, pos)) {
            (Some(h), Some(d)) => ([h, d], true),
            _ => ([0.0, 0.0], false),
        }
    }
}

//! Online Bayesian Hilbert map: sequential variational Bayesian logistic
//! regression over the active hinge subset, plus the persistent global
//! occupancy database the explorer accumulates into.
//!
//! The weight posterior is a factorized Gaussian (per-hinge mean `mu` and
//! variance `s2`). Each scan's batch is absorbed with the local variational
//! bound on the logistic likelihood: holding the pre-batch posterior fixed
//! as the prior, iterate
//!
//! ```text
//! 1/s2_j <- 1/s2_prev_j + 2 * sum_n lambda(xi_n) * z_nj^2
//! mu_j   <- s2_j * (mu_prev_j / s2_prev_j + sum_n (y_n - 1/2) * z_nj)
//! xi_n^2 <- (sum_j mu_j z_nj)^2 + sum_j s2_j z_nj^2
//! ```
//!
//! with `lambda(xi) = tanh(xi/2) / (4 xi)`, `lambda(0) = 1/8`, and
//! `z = -Phi(x)` so that occupancy is `sigma(-w^T Phi)` with y=1 occupied.

use crate::error::{Error, Result};
use crate::features::{hull_contains, HingeGrid, SPARSITY_CUTOFF};
use crate::geom::{Grid2, Point2, Rect};
use crate::reward::entropy;

/// A labeled sample taken from one lidar scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingPoint {
    pub pos: Point2,
    pub occupied: bool,
}

impl TrainingPoint {
    pub fn occupied(pos: Point2) -> Self {
        Self { pos, occupied: true }
    }

    pub fn free(pos: Point2) -> Self {
        Self { pos, occupied: false }
    }

    fn y(self) -> f64 {
        if self.occupied {
            1.0
        } else {
            0.0
        }
    }
}

/// Keeps the moderated logit inside the range where `sigmoid` is strictly
/// between 0 and 1 in f64, so downstream entropies never hit exact 0/1.
const LOGIT_CLAMP: f64 = 36.0;

fn sigmoid(t: f64) -> f64 {
    let t = t.clamp(-LOGIT_CLAMP, LOGIT_CLAMP);
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Local variational bound coefficient; continuous extension at 0.
fn lambda(xi: f64) -> f64 {
    if xi == 0.0 {
        0.125
    } else {
        (0.5 * xi).tanh() / (4.0 * xi)
    }
}

/// Sparse negative-feature vector of one position against the active hinge
/// subset: entries `(local_index, -Phi_j)` with activations under the
/// sparsity cutoff dropped. Scans only the lattice window that can reach
/// the cutoff instead of the whole active set.
fn sparse_z(
    x: Point2,
    hinges: &HingeGrid,
    gamma: f64,
    local_of: &[Option<u32>],
    out: &mut Vec<(u32, f64)>,
) {
    out.clear();
    let g = hinges.grid();
    let r_cut = (-(SPARSITY_CUTOFF.ln()) / gamma).sqrt() + 1e-12;
    let lo = |c: f64, o: f64| (((c - r_cut - o) / g.resolution).ceil().max(0.0)) as usize;
    let hi = |c: f64, o: f64, n: usize| {
        (((c + r_cut - o) / g.resolution).floor().min((n - 1) as f64).max(-1.0)) as isize
    };
    let i0 = lo(x.x, g.origin.x);
    let j0 = lo(x.y, g.origin.y);
    let i1 = hi(x.x, g.origin.x, g.nx);
    let j1 = hi(x.y, g.origin.y, g.ny);
    for j in j0 as isize..=j1 {
        for i in i0 as isize..=i1 {
            let idx = g.index(i as usize, j as usize);
            if let Some(local) = local_of[idx] {
                let v = (-gamma * x.dist2(hinges.point(idx))).exp();
                if v >= SPARSITY_CUTOFF {
                    out.push((local, -v));
                }
            }
        }
    }
}

/// Factorized Gaussian posterior over all hinge weights.
#[derive(Debug, Clone, PartialEq)]
pub struct BhmModel {
    mu: Vec<f64>,
    s2: Vec<f64>,
    alpha: f64,
    gamma: f64,
}

impl BhmModel {
    /// Fresh model at the prior: `mu = 0`, `s2 = alpha` for every hinge.
    pub fn init(hinges: &HingeGrid, alpha: f64, gamma: f64) -> Result<Self> {
        if alpha <= 0.0 || !alpha.is_finite() {
            return Err(Error::NonPositive { what: "alpha", value: alpha });
        }
        if gamma <= 0.0 || !gamma.is_finite() {
            return Err(Error::NonPositive { what: "gamma", value: gamma });
        }
        Ok(Self {
            mu: vec![0.0; hinges.len()],
            s2: vec![alpha; hinges.len()],
            alpha,
            gamma,
        })
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn s2(&self) -> &[f64] {
        &self.s2
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Absorbs one batch. Only `active` hinge entries change; the rest keep
    /// their current state. Returns the final `xi` per training point so
    /// callers can check fixed-point convergence.
    pub fn update(
        &mut self,
        hinges: &HingeGrid,
        batch: &[TrainingPoint],
        active: &[usize],
        n_iters: usize,
    ) -> Result<Vec<f64>> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        if active.is_empty() {
            return Err(Error::EmptyActiveSet);
        }
        debug_assert!(n_iters >= 1);
        debug_assert_eq!(self.mu.len(), hinges.len());

        let mut local_of = vec![None; hinges.len()];
        for (local, &idx) in active.iter().enumerate() {
            debug_assert!(idx < hinges.len());
            local_of[idx] = Some(local as u32);
        }

        // Features depend only on geometry: compute each point's sparse z once.
        let mut zs: Vec<Vec<(u32, f64)>> = Vec::with_capacity(batch.len());
        let mut buf = Vec::new();
        for tp in batch {
            sparse_z(tp.pos, hinges, self.gamma, &local_of, &mut buf);
            zs.push(buf.clone());
        }

        let k = active.len();
        let mu_prev: Vec<f64> = active.iter().map(|&idx| self.mu[idx]).collect();
        let s2_prev: Vec<f64> = active.iter().map(|&idx| self.s2[idx]).collect();

        // The label term never depends on xi; accumulate it once.
        let mut b = vec![0.0; k];
        for (tp, z) in batch.iter().zip(&zs) {
            let w = tp.y() - 0.5;
            for &(j, zv) in z {
                b[j as usize] += w * zv;
            }
        }

        let mut xi: Vec<f64> = vec![1.0; batch.len()];
        let mut mu = vec![0.0; k];
        let mut s2 = vec![0.0; k];
        for _ in 0..n_iters {
            let mut a = vec![0.0; k];
            for (z, &x) in zs.iter().zip(&xi) {
                let lam = lambda(x);
                for &(j, zv) in z {
                    a[j as usize] += lam * zv * zv;
                }
            }
            for j in 0..k {
                s2[j] = 1.0 / (1.0 / s2_prev[j] + 2.0 * a[j]);
                mu[j] = s2[j] * (mu_prev[j] / s2_prev[j] + b[j]);
            }
            for (z, x) in zs.iter().zip(xi.iter_mut()) {
                let mut m = 0.0;
                let mut v = 0.0;
                for &(j, zv) in z {
                    m += mu[j as usize] * zv;
                    v += s2[j as usize] * zv * zv;
                }
                *x = (m * m + v).sqrt();
            }
        }

        for (local, &idx) in active.iter().enumerate() {
            self.mu[idx] = mu[local];
            self.s2[idx] = s2[local];
        }
        Ok(xi)
    }

    /// Moderated posterior predictive occupancy at each query:
    /// `sigma(m / sqrt(1 + (pi/8) v))` with `m = mu.z`, `v = s2.z^2`.
    pub fn predict(
        &self,
        hinges: &HingeGrid,
        queries: &[Point2],
        active: &[usize],
    ) -> Result<Vec<f64>> {
        if active.is_empty() {
            return Err(Error::EmptyActiveSet);
        }
        debug_assert_eq!(self.mu.len(), hinges.len());
        let mut local_of = vec![None; hinges.len()];
        for (local, &idx) in active.iter().enumerate() {
            local_of[idx] = Some(local as u32);
        }
        let mu: Vec<f64> = active.iter().map(|&idx| self.mu[idx]).collect();
        let s2: Vec<f64> = active.iter().map(|&idx| self.s2[idx]).collect();

        let mut out = Vec::with_capacity(queries.len());
        let mut z = Vec::new();
        for &q in queries {
            sparse_z(q, hinges, self.gamma, &local_of, &mut z);
            let mut m = 0.0;
            let mut v = 0.0;
            for &(j, zv) in &z {
                m += mu[j as usize] * zv;
                v += s2[j as usize] * zv * zv;
            }
            let kappa = 1.0 / (1.0 + std::f64::consts::PI / 8.0 * v).sqrt();
            out.push(sigmoid(m * kappa));
        }
        Ok(out)
    }
}

/// Persistent occupancy estimate over the fixed query lattice. Cells start
/// at exactly 0.5 and keep the latest merged prediction thereafter.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalMapDb {
    grid: Grid2,
    p: Vec<f64>,
    predicted: Vec<bool>,
}

impl GlobalMapDb {
    pub fn new(bounds: Rect, resolution: f64) -> Result<Self> {
        let grid = Grid2::covering(bounds, resolution)?;
        let n = grid.len();
        Ok(Self { grid, p: vec![0.5; n], predicted: vec![false; n] })
    }

    /// Rebuilds a database from previously exported cell probabilities
    /// (cells at exactly 0.5 are treated as never predicted).
    pub fn from_cells(grid: Grid2, p: Vec<f64>) -> Result<Self> {
        if p.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} cells for a {}x{} grid",
                p.len(),
                grid.nx,
                grid.ny
            )));
        }
        if let Some(bad) = p.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Format {
                what: "cell probability",
                message: format!("{bad} outside [0,1]"),
            });
        }
        let predicted = p.iter().map(|&v| v != 0.5).collect();
        Ok(Self { grid, p, predicted })
    }

    pub fn grid(&self) -> &Grid2 {
        &self.grid
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    pub fn predicted(&self) -> &[bool] {
        &self.predicted
    }

    /// Overwrites the cells that fall inside `hull` with fresh predictions;
    /// everything else is untouched. Queries must sit on lattice cells.
    /// Returns how many cells were written.
    pub fn merge(&mut self, hull: &[Point2], queries: &[Point2], probs: &[f64]) -> Result<usize> {
        debug_assert_eq!(queries.len(), probs.len());
        let mut written = 0;
        for (&q, &p) in queries.iter().zip(probs) {
            let (i, j) = self
                .grid
                .snap(q, 1e-6)
                .ok_or(Error::OffGrid { x: q.x, y: q.y })?;
            if !hull_contains(hull, q) {
                continue;
            }
            debug_assert!((0.0..=1.0).contains(&p));
            let idx = self.grid.index(i, j);
            self.p[idx] = p;
            self.predicted[idx] = true;
            written += 1;
        }
        Ok(written)
    }

    /// Sum of per-cell binary entropies (nats) over the whole lattice.
    pub fn total_entropy(&self) -> f64 {
        self.p.iter().map(|&p| entropy(p)).sum()
    }

    /// Fraction of cells mapped with confidence: |p - 0.5| > 0.25.
    pub fn coverage(&self) -> f64 {
        let n = self.p.iter().filter(|&&p| (p - 0.5).abs() > 0.25).count();
        n as f64 / self.p.len() as f64
    }
}

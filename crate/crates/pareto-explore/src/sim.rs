//! Deterministic 2D simulation: ground-truth occupancy world, raycast
//! lidar, unicycle arc primitives, training-point sampling, and the
//! swept-disk collision filter shared by the planner and the explorer.

use rand::Rng;

use crate::bhm::TrainingPoint;
use crate::error::{Error, Result};
use crate::geom::{wrap_angle, Point2, Rect};

/// Ground-truth binary occupancy grid. Cell (i, j) covers the square
/// `[origin + (i, j)*cell, origin + (i+1, j+1)*cell)`, row 0 at the bottom.
/// The border ring must be fully occupied so rays can never escape.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldMap {
    origin: Point2,
    cell_size: f64,
    nx: usize,
    ny: usize,
    occ: Vec<bool>,
}

impl WorldMap {
    pub fn new(origin: Point2, cell_size: f64, nx: usize, ny: usize, occ: Vec<bool>) -> Result<Self> {
        if cell_size <= 0.0 || !cell_size.is_finite() {
            return Err(Error::NonPositive { what: "cell size", value: cell_size });
        }
        if nx < 3 || ny < 3 || occ.len() != nx * ny {
            return Err(Error::Format {
                what: "world grid",
                message: format!("{nx}x{ny} grid with {} cells", occ.len()),
            });
        }
        let world = Self { origin, cell_size, nx, ny, occ };
        for i in 0..nx {
            if !world.occupied_cell(i, 0) || !world.occupied_cell(i, ny - 1) {
                return Err(Error::Format {
                    what: "world grid",
                    message: "border must be fully occupied (closed world)".into(),
                });
            }
        }
        for j in 0..ny {
            if !world.occupied_cell(0, j) || !world.occupied_cell(nx - 1, j) {
                return Err(Error::Format {
                    what: "world grid",
                    message: "border must be fully occupied (closed world)".into(),
                });
            }
        }
        Ok(world)
    }

    /// Parses an ASCII map: `#` occupied, `.` free, one row per line with
    /// the first line the top row. Blank lines are ignored.
    pub fn from_ascii(text: &str, cell_size: f64) -> Result<Self> {
        let rows: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        if rows.is_empty() {
            return Err(Error::Format { what: "ascii map", message: "no rows".into() });
        }
        let nx = rows[0].chars().count();
        let ny = rows.len();
        let mut occ = vec![false; nx * ny];
        for (r, row) in rows.iter().enumerate() {
            if row.chars().count() != nx {
                return Err(Error::Format {
                    what: "ascii map",
                    message: format!("row {} has {} cells, expected {nx}", r + 1, row.chars().count()),
                });
            }
            let j = ny - 1 - r; // first line is the top row
            for (i, c) in row.chars().enumerate() {
                occ[j * nx + i] = match c {
                    '#' => true,
                    '.' => false,
                    other => {
                        return Err(Error::Format {
                            what: "ascii map",
                            message: format!("unexpected character {other:?} in row {}", r + 1),
                        })
                    }
                };
            }
        }
        Self::new(Point2::new(0.0, 0.0), cell_size, nx, ny, occ)
    }

    /// Builds a world from 8-bit grayscale pixels, top row first; a cell is
    /// occupied iff its pixel value is below 128.
    pub fn from_pixels(width: usize, height: usize, pixels: &[u8], cell_size: f64) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::Format {
                what: "world image",
                message: format!("{}x{} image with {} pixels", width, height, pixels.len()),
            });
        }
        let mut occ = vec![false; width * height];
        for (k, &v) in pixels.iter().enumerate() {
            let i = k % width;
            let r = k / width;
            let j = height - 1 - r;
            occ[j * width + i] = v < 128;
        }
        Self::new(Point2::new(0.0, 0.0), cell_size, width, height, occ)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn origin(&self) -> Point2 {
        self.origin
    }

    pub fn bounds(&self) -> Rect {
        Rect::new(
            self.origin,
            self.origin + Point2::new(self.nx as f64 * self.cell_size, self.ny as f64 * self.cell_size),
        )
    }

    pub fn occupied_cell(&self, i: usize, j: usize) -> bool {
        debug_assert!(i < self.nx && j < self.ny);
        self.occ[j * self.nx + i]
    }

    fn cell_of(&self, p: Point2) -> Option<(usize, usize)> {
        let i = ((p.x - self.origin.x) / self.cell_size).floor();
        let j = ((p.y - self.origin.y) / self.cell_size).floor();
        if i < 0.0 || j < 0.0 || i >= self.nx as f64 || j >= self.ny as f64 {
            return None;
        }
        Some((i as usize, j as usize))
    }

    /// Occupancy of the cell containing `p`; `None` outside the world.
    pub fn occupied_at(&self, p: Point2) -> Option<bool> {
        self.cell_of(p).map(|(i, j)| self.occupied_cell(i, j))
    }

    pub fn is_free(&self, p: Point2) -> bool {
        self.occupied_at(p) == Some(false)
    }
}

/// Robot pose; `theta` is always wrapped to (-pi, pi].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotPose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl RobotPose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta: wrap_angle(theta) }
    }

    pub fn pos(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }
}

/// Constant-curvature arc: travel `arc_length` meters while the heading
/// changes uniformly by `dtheta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionPrimitive {
    pub arc_length: f64,
    pub dtheta: f64,
}

impl MotionPrimitive {
    pub fn new(arc_length: f64, dtheta: f64) -> Self {
        debug_assert!(arc_length > 0.0);
        Self { arc_length, dtheta }
    }
}

/// Kinematic result of following the arc: straight line when `dtheta` is
/// zero, otherwise a circle of radius `arc_length / dtheta`.
pub fn apply_action(pose: RobotPose, a: MotionPrimitive) -> RobotPose {
    if a.dtheta == 0.0 {
        return RobotPose::new(
            pose.x + a.arc_length * pose.theta.cos(),
            pose.y + a.arc_length * pose.theta.sin(),
            pose.theta,
        );
    }
    let r = a.arc_length / a.dtheta;
    let t1 = pose.theta + a.dtheta;
    RobotPose::new(
        pose.x + r * (t1.sin() - pose.theta.sin()),
        pose.y - r * (t1.cos() - pose.theta.cos()),
        t1,
    )
}

/// One lidar beam; `angle` is in the robot frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beam {
    pub angle: f64,
    pub range: f64,
    pub hit: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LidarScan {
    pub pose: RobotPose,
    pub beams: Vec<Beam>,
    pub max_range: f64,
    pub fov: f64,
}

impl LidarScan {
    pub fn world_angle(&self, beam: &Beam) -> f64 {
        self.pose.theta + beam.angle
    }

    pub fn endpoint(&self, beam: &Beam) -> Point2 {
        let a = self.world_angle(beam);
        self.pose.pos() + Point2::new(a.cos(), a.sin()) * beam.range
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LidarParams {
    pub fov: f64,
    pub n_beams: usize,
    pub max_range: f64,
    /// Std-dev of additive Gaussian range noise; 0 (the default everywhere
    /// in the test suite) keeps scans exactly deterministic.
    pub noise_sigma: f64,
}

/// Distance to the boundary of the first occupied cell along the ray,
/// found by exact grid traversal; `(max_range, false)` when nothing is hit
/// within range. Where the ray passes exactly through a cell corner the
/// x-crossing is taken first.
pub fn raycast(world: &WorldMap, origin: Point2, angle: f64, max_range: f64) -> Result<(f64, bool)> {
    if world.occupied_at(origin) != Some(false) {
        return Err(Error::OriginOccupied);
    }
    let dx = angle.cos();
    let dy = angle.sin();
    let cs = world.cell_size;
    let (mut i, mut j) = world.cell_of(origin).expect("origin checked above");

    let axis = |d: f64, frac: f64| -> (isize, f64, f64) {
        // Returns (step, t at first crossing, t per cell).
        if d > 0.0 {
            (1, (1.0 - frac) * cs / d, cs / d)
        } else if d < 0.0 {
            (-1, frac * cs / -d, cs / -d)
        } else {
            (0, f64::INFINITY, f64::INFINITY)
        }
    };
    let frac_x = (origin.x - world.origin.x) / cs - i as f64;
    let frac_y = (origin.y - world.origin.y) / cs - j as f64;
    let (step_i, mut tmax_x, tdelta_x) = axis(dx, frac_x);
    let (step_j, mut tmax_y, tdelta_y) = axis(dy, frac_y);

    loop {
        let t;
        if tmax_x <= tmax_y {
            t = tmax_x;
            tmax_x += tdelta_x;
            i = i.wrapping_add_signed(step_i);
        } else {
            t = tmax_y;
            tmax_y += tdelta_y;
            j = j.wrapping_add_signed(step_j);
        }
        if t > max_range {
            return Ok((max_range, false));
        }
        if i >= world.nx || j >= world.ny {
            // Unreachable in a closed world; exiting counts as a miss.
            return Ok((max_range, false));
        }
        if world.occupied_cell(i, j) {
            return Ok((t, true));
        }
    }
}

/// Sweeps `n_beams` rays evenly across `fov` centered on the heading:
/// beam k sits at robot-frame angle `-fov/2 + k*fov/(n_beams-1)`.
pub fn scan(
    world: &WorldMap,
    pose: RobotPose,
    params: &LidarParams,
    rng: &mut impl Rng,
) -> Result<LidarScan> {
    if params.n_beams < 2 {
        return Err(Error::TooFewBeams);
    }
    let mut beams = Vec::with_capacity(params.n_beams);
    for k in 0..params.n_beams {
        let rel = -params.fov / 2.0 + k as f64 * params.fov / (params.n_beams - 1) as f64;
        let (mut range, hit) = raycast(world, pose.pos(), pose.theta + rel, params.max_range)?;
        if params.noise_sigma > 0.0 {
            let noise: f64 = rng.sample(rand_distr::StandardNormal);
            range = (range + params.noise_sigma * noise).clamp(1e-6, params.max_range);
        }
        beams.push(Beam { angle: rel, range, hit });
    }
    Ok(LidarScan { pose, beams, max_range: params.max_range, fov: params.fov })
}

/// Converts a scan into labeled points: free samples every `free_spacing`
/// meters strictly inside each beam, plus the endpoint — occupied when the
/// beam hit, free when it ran out at max range.
pub fn sample_training_points(scan: &LidarScan, free_spacing: f64) -> Vec<TrainingPoint> {
    debug_assert!(free_spacing > 0.0);
    let mut out = Vec::new();
    for beam in &scan.beams {
        let a = scan.world_angle(beam);
        let dir = Point2::new(a.cos(), a.sin());
        let start = scan.pose.pos();
        let mut k = 1usize;
        loop {
            let d = k as f64 * free_spacing;
            if d >= beam.range {
                break;
            }
            out.push(TrainingPoint::free(start + dir * d));
            k += 1;
        }
        let end = start + dir * beam.range;
        if beam.hit {
            out.push(TrainingPoint::occupied(end));
        } else {
            out.push(TrainingPoint::free(end));
        }
    }
    out
}

/// Number of rim samples around each swept-disk center.
const DISK_POINTS: usize = 8;

/// True iff the whole arc can be followed with every point of the robot's
/// disk seeing occupancy probability strictly below `occ_threshold`.
/// `prob_at` supplies occupancy for any query (out-of-map should map to 1).
/// Centers are sampled every `robot_radius/2` meters along the arc up to
/// and including the endpoint, each checked at the center plus 8 rim
/// points. The start pose itself is not judged: the robot already stands
/// there, and a scan can retroactively harden cells around a pose that was
/// legal when entered — motion away must stay possible.
pub fn collision_free(
    prob_at: &dyn Fn(Point2) -> f64,
    from: RobotPose,
    action: MotionPrimitive,
    robot_radius: f64,
    occ_threshold: f64,
) -> bool {
    debug_assert!(robot_radius > 0.0);
    debug_assert!(occ_threshold > 0.0 && occ_threshold < 1.0);
    let spacing = robot_radius / 2.0;
    let n = (action.arc_length / spacing).ceil() as usize;
    for k in 1..=n {
        let f = k as f64 / n as f64;
        let c = apply_action(
            from,
            MotionPrimitive { arc_length: action.arc_length * f, dtheta: action.dtheta * f },
        )
        .pos();
        if prob_at(c) >= occ_threshold {
            return false;
        }
        for r in 0..DISK_POINTS {
            let a = r as f64 * std::f64::consts::TAU / DISK_POINTS as f64;
            let p = c + Point2::new(a.cos(), a.sin()) * robot_radius;
            if prob_at(p) >= occ_threshold {
                return false;
            }
        }
    }
    true
}

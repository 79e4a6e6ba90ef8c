//! The receding-horizon exploration loop: scan, sample training points,
//! select hinges under the enlarged scan hull, update the Bayesian Hilbert
//! map, rebuild the reward layers, search, execute the first action of the
//! best trajectory, and repeat until a termination trigger fires.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bhm::{BhmModel, GlobalMapDb};
use crate::config::ExplorationConfig;
use crate::error::{Error, Result};
use crate::features::{convex_hull, enlarge_hull, hull_contains, select_hinges, HingeGrid};
use crate::geom::Point2;
use crate::planner::{search, SearchParams, SearchTree};
use crate::reward::OccupancyField;
use crate::sim::{
    apply_action, collision_free, sample_training_points, scan, LidarParams, MotionPrimitive,
    RobotPose, WorldMap,
};

/// In-place rotation applied when the planner reports a dead end.
pub const RECOVERY_DTHETA: f64 = std::f64::consts::FRAC_PI_3;

/// Which termination trigger ended the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxSteps,
    EntropyTarget,
    DynamicsSettled,
}

/// One executed step of the loop.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// 1-based step index.
    pub step: usize,
    /// Pose after executing this step's action (or recovery rotation).
    pub pose: RobotPose,
    /// Executed action; `None` when the step was a recovery rotation.
    pub action: Option<MotionPrimitive>,
    pub recovery: bool,
    /// Sum of per-cell entropies over the global map, nats.
    pub total_entropy: f64,
    /// Fraction of cells with |p - 0.5| > 0.25.
    pub coverage: f64,
    /// Largest per-cell dynamics value this step.
    pub max_dynamics: f64,
    pub planner_ms: f64,
    pub map_ms: f64,
}

pub struct Explorer {
    config: ExplorationConfig,
    world: WorldMap,
    hinges: HingeGrid,
    model: BhmModel,
    db: GlobalMapDb,
    prev_p: Option<Vec<f64>>,
    pose: RobotPose,
    rng: ChaCha8Rng,
    lidar: LidarParams,
    search_params: SearchParams,
    step_index: usize,
    initial_entropy: f64,
    low_dynamics_streak: usize,
    stop: Option<StopReason>,
    hulls: Vec<Vec<Point2>>,
    last_tree: Option<SearchTree>,
}

impl Explorer {
    pub fn new(config: ExplorationConfig, world: WorldMap) -> Result<Self> {
        let pose = config.start_pose();
        if !world.is_free(pose.pos()) {
            return Err(Error::OriginOccupied);
        }
        let bounds = world.bounds();
        let hinges = HingeGrid::build(bounds, config.hinge_resolution)?;
        let model = BhmModel::init(&hinges, config.alpha, config.gamma)?;
        let db = GlobalMapDb::new(bounds, config.query_resolution)?;
        let initial_entropy = db.total_entropy();
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        let lidar = config.lidar();
        let search_params = config.search_params();
        Ok(Self {
            config,
            world,
            hinges,
            model,
            db,
            prev_p: None,
            pose,
            rng,
            lidar,
            search_params,
            step_index: 0,
            initial_entropy,
            low_dynamics_streak: 0,
            stop: None,
            hulls: Vec::new(),
            last_tree: None,
        })
    }

    pub fn pose(&self) -> RobotPose {
        self.pose
    }

    pub fn db(&self) -> &GlobalMapDb {
        &self.db
    }

    pub fn world(&self) -> &WorldMap {
        &self.world
    }

    pub fn config(&self) -> &ExplorationConfig {
        &self.config
    }

    pub fn initial_entropy(&self) -> f64 {
        self.initial_entropy
    }

    pub fn stop_reason(&self) -> Option<StopReason> {
        self.stop
    }

    /// Enlarged scan hulls of all executed steps, in order.
    pub fn hulls(&self) -> &[Vec<Point2>] {
        &self.hulls
    }

    /// Search tree of the most recent step, when that step ran a search.
    pub fn last_tree(&self) -> Option<&SearchTree> {
        self.last_tree.as_ref()
    }

    /// Fallback scan region when the hull degenerates: a 16-gon disk of
    /// lidar max range around the robot.
    fn disk_hull(&self) -> Vec<Point2> {
        let c = self.pose.pos();
        let r = self.lidar.max_range;
        (0..16)
            .map(|k| {
                let a = k as f64 * std::f64::consts::TAU / 16.0;
                c + Point2::new(a.cos(), a.sin()) * r
            })
            .collect()
    }

    /// Runs one full sense-map-plan-act cycle.
    pub fn step(&mut self) -> Result<StepRecord> {
        let map_start = Instant::now();

        // Sense and sample.
        let scan = scan(&self.world, self.pose, &self.lidar, &mut self.rng)?;
        let batch = sample_training_points(&scan, self.config.free_spacing);

        // Hull over the training points, slightly enlarged, picks the
        // active hinges for this update.
        let positions: Vec<Point2> = batch.iter().map(|tp| tp.pos).collect();
        let hull = match convex_hull(&positions) {
            Ok(h) => enlarge_hull(&h, self.config.hull_margin),
            Err(Error::DegenerateHull) => self.disk_hull(),
            Err(e) => return Err(e),
        };
        let mut active = select_hinges(&hull, &self.hinges);
        let hull = if active.is_empty() {
            // A hull squeezed between lattice points selects nothing;
            // fall back to the disk region.
            let disk = self.disk_hull();
            active = select_hinges(&disk, &self.hinges);
            disk
        } else {
            hull
        };

        // Absorb the batch, refresh predictions inside the hull, merge.
        self.model.update(&self.hinges, &batch, &active, self.config.vi_iterations)?;
        let queries: Vec<Point2> = self
            .db
            .grid()
            .points()
            .filter(|&q| hull_contains(&hull, q))
            .collect();
        let probs = self.model.predict(&self.hinges, &queries, &active)?;
        self.db.merge(&hull, &queries, &probs)?;
        self.hulls.push(hull);

        // Reward layers: entropy of the fresh map, dynamics against the
        // previous map snapshot (all zeros on the first step).
        let field = OccupancyField::new(
            self.db.grid().clone(),
            self.db.probabilities().to_vec(),
            self.prev_p.as_deref(),
        )?;
        self.prev_p = Some(self.db.probabilities().to_vec());
        let max_dynamics =
            field.dynamics_layer().iter().copied().fold(0.0, f64::max);
        let map_ms = map_start.elapsed().as_secs_f64() * 1e3;

        // Plan and act: execute only the first action, or rotate in place
        // when every root action collides.
        let planner_start = Instant::now();
        let radius = self.config.robot_radius;
        let threshold = self.config.occ_threshold;
        let occ = |p: Point2| field.occupancy_at(p).unwrap_or(1.0);
        let filter =
            |pose: RobotPose, a: MotionPrimitive| collision_free(&occ, pose, a, radius, threshold);
        let (action, recovery) =
            match search(self.pose, &field, &filter, &self.search_params, &mut self.rng) {
                Ok((result, tree)) => {
                    self.last_tree = Some(tree);
                    (Some(result.first_action), false)
                }
                Err(Error::Trapped) => {
                    self.last_tree = None;
                    (None, true)
                }
                Err(e) => return Err(e),
            };
        let planner_ms = planner_start.elapsed().as_secs_f64() * 1e3;

        self.pose = match action {
            Some(a) => apply_action(self.pose, a),
            None => RobotPose::new(self.pose.x, self.pose.y, self.pose.theta + RECOVERY_DTHETA),
        };

        self.step_index += 1;
        let record = StepRecord {
            step: self.step_index,
            pose: self.pose,
            action,
            recovery,
            total_entropy: self.db.total_entropy(),
            coverage: self.db.coverage(),
            max_dynamics,
            planner_ms,
            map_ms,
        };

        // Termination triggers, checked in a fixed order.
        if self.step_index >= self.config.max_steps {
            self.stop = Some(StopReason::MaxSteps);
        } else if record.total_entropy
            <= self.config.entropy_fraction * self.initial_entropy
        {
            self.stop = Some(StopReason::EntropyTarget);
        } else {
            if max_dynamics < self.config.dynamics_epsilon {
                self.low_dynamics_streak += 1;
            } else {
                self.low_dynamics_streak = 0;
            }
            if self.low_dynamics_streak >= self.config.dynamics_patience {
                self.stop = Some(StopReason::DynamicsSettled);
            }
        }
        Ok(record)
    }

    /// Steps until a termination trigger fires; returns all records.
    pub fn run(&mut self) -> Result<Vec<StepRecord>> {
        let mut records = Vec::new();
        while self.stop.is_none() {
            records.push(self.step()?);
        }
        Ok(records)
    }
}

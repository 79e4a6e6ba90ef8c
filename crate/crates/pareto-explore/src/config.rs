//! Flat `key = value` run configuration. Every engine parameter has
//! exactly one key; missing keys take the documented defaults, unknown or
//! malformed keys are rejected with the offending line number. See
//! `docs/config.md` for the full key list.

use std::collections::HashSet;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::planner::SearchParams;
use crate::sim::{LidarParams, MotionPrimitive, RobotPose};

#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationConfig {
    /// Ground-truth world file: ASCII map or 8-bit PGM.
    pub world: PathBuf,
    /// Edge length of one world cell, meters.
    pub world_cell_size: f64,
    pub start_x: f64,
    pub start_y: f64,
    pub start_theta: f64,
    pub hinge_resolution: f64,
    pub query_resolution: f64,
    /// RBF kernel scale (1/m^2).
    pub gamma: f64,
    /// Prior weight variance.
    pub alpha: f64,
    pub vi_iterations: usize,
    /// Convex-hull enlargement, meters; defaults to 2 * hinge_resolution.
    pub hull_margin: f64,
    pub lidar_fov: f64,
    pub lidar_beams: usize,
    pub lidar_max_range: f64,
    pub lidar_noise_sigma: f64,
    pub free_spacing: f64,
    pub arc_length: f64,
    /// Heading changes of the action set, degrees.
    pub dthetas_deg: Vec<f64>,
    pub budget: usize,
    pub ucb_c: f64,
    pub tree_depth: usize,
    pub rollout_depth: usize,
    pub robot_radius: f64,
    pub occ_threshold: f64,
    pub max_steps: usize,
    /// Stop when total entropy falls to this fraction of the initial value.
    pub entropy_fraction: f64,
    pub dynamics_epsilon: f64,
    pub dynamics_patience: usize,
    pub seed: u64,
    /// Emit a map snapshot every N steps; 0 disables snapshots.
    pub snapshot_every: usize,
}

impl Default for ExplorationConfig {
    fn default() -> Self {
        Self {
            world: PathBuf::from("maps/maze_12x12.txt"),
            world_cell_size: 0.2,
            start_x: 1.0,
            start_y: 1.0,
            start_theta: 0.0,
            hinge_resolution: 0.2,
            query_resolution: 0.1,
            gamma: 40.0,
            alpha: 10.0,
            vi_iterations: 3,
            hull_margin: 0.4,
            lidar_fov: std::f64::consts::TAU,
            lidar_beams: 72,
            lidar_max_range: 5.0,
            lidar_noise_sigma: 0.0,
            free_spacing: 0.3,
            arc_length: 0.5,
            dthetas_deg: vec![-60.0, -30.0, 0.0, 30.0, 60.0],
            budget: 500,
            ucb_c: 0.4,
            tree_depth: 8,
            rollout_depth: 5,
            robot_radius: 0.2,
            occ_threshold: 0.4,
            max_steps: 300,
            entropy_fraction: 0.12,
            dynamics_epsilon: 0.001,
            dynamics_patience: 10,
            seed: 7,
            snapshot_every: 0,
        }
    }
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Config { line, message: message.into() }
}

fn parse_f64(key: &str, value: &str, line: usize) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| err(line, format!("{key}: expected a number, got {value:?}")))
}

fn parse_usize(key: &str, value: &str, line: usize) -> Result<usize> {
    value
        .parse::<usize>()
        .map_err(|_| err(line, format!("{key}: expected a non-negative integer, got {value:?}")))
}

fn require(cond: bool, key: &str, line: usize, rule: &str, value: impl std::fmt::Display) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(err(line, format!("{key} must be {rule}, got {value}")))
    }
}

impl ExplorationConfig {
    /// Parses and validates config text. An empty file yields the full
    /// default configuration.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen: HashSet<String> = HashSet::new();
        let mut hull_margin_set = false;

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(err(line, format!("expected `key = value`, got {content:?}")));
            };
            let key = key.trim();
            let value = value.trim();
            if !seen.insert(key.to_string()) {
                return Err(err(line, format!("duplicate key {key:?}")));
            }

            match key {
                "world" => cfg.world = PathBuf::from(value),
                "world_cell_size" => {
                    cfg.world_cell_size = parse_f64(key, value, line)?;
                    require(cfg.world_cell_size > 0.0, key, line, "positive", value)?;
                }
                "start_x" => cfg.start_x = parse_f64(key, value, line)?,
                "start_y" => cfg.start_y = parse_f64(key, value, line)?,
                "start_theta" => cfg.start_theta = parse_f64(key, value, line)?,
                "hinge_resolution" => {
                    cfg.hinge_resolution = parse_f64(key, value, line)?;
                    require(cfg.hinge_resolution > 0.0, key, line, "positive", value)?;
                }
                "query_resolution" => {
                    cfg.query_resolution = parse_f64(key, value, line)?;
                    require(cfg.query_resolution > 0.0, key, line, "positive", value)?;
                }
                "gamma" => {
                    cfg.gamma = parse_f64(key, value, line)?;
                    require(cfg.gamma > 0.0, key, line, "positive", value)?;
                }
                "alpha" => {
                    cfg.alpha = parse_f64(key, value, line)?;
                    require(cfg.alpha > 0.0, key, line, "positive", value)?;
                }
                "vi_iterations" => {
                    cfg.vi_iterations = parse_usize(key, value, line)?;
                    require(cfg.vi_iterations >= 1, key, line, "at least 1", value)?;
                }
                "hull_margin" => {
                    cfg.hull_margin = parse_f64(key, value, line)?;
                    require(cfg.hull_margin >= 0.0, key, line, "non-negative", value)?;
                    hull_margin_set = true;
                }
                "lidar_fov" => {
                    cfg.lidar_fov = parse_f64(key, value, line)?;
                    require(
                        cfg.lidar_fov > 0.0 && cfg.lidar_fov <= std::f64::consts::TAU + 1e-9,
                        key,
                        line,
                        "in (0, 2*pi]",
                        value,
                    )?;
                }
                "lidar_beams" => {
                    cfg.lidar_beams = parse_usize(key, value, line)?;
                    require(cfg.lidar_beams >= 2, key, line, "at least 2", value)?;
                }
                "lidar_max_range" => {
                    cfg.lidar_max_range = parse_f64(key, value, line)?;
                    require(cfg.lidar_max_range > 0.0, key, line, "positive", value)?;
                }
                "lidar_noise_sigma" => {
                    cfg.lidar_noise_sigma = parse_f64(key, value, line)?;
                    require(cfg.lidar_noise_sigma >= 0.0, key, line, "non-negative", value)?;
                }
                "free_spacing" => {
                    cfg.free_spacing = parse_f64(key, value, line)?;
                    require(cfg.free_spacing > 0.0, key, line, "positive", value)?;
                }
                "arc_length" => {
                    cfg.arc_length = parse_f64(key, value, line)?;
                    require(cfg.arc_length > 0.0, key, line, "positive", value)?;
                }
                "dthetas_deg" => {
                    let mut list = Vec::new();
                    for part in value.split(',') {
                        list.push(parse_f64(key, part.trim(), line)?);
                    }
                    require(!list.is_empty(), key, line, "a non-empty list", value)?;
                    cfg.dthetas_deg = list;
                }
                "budget" => {
                    cfg.budget = parse_usize(key, value, line)?;
                    require(cfg.budget >= 1, key, line, "at least 1", value)?;
                }
                "ucb_c" => {
                    cfg.ucb_c = parse_f64(key, value, line)?;
                    require(cfg.ucb_c >= 0.0, key, line, "non-negative", value)?;
                }
                "tree_depth" => {
                    cfg.tree_depth = parse_usize(key, value, line)?;
                    require(cfg.tree_depth >= 1, key, line, "at least 1", value)?;
                }
                "rollout_depth" => {
                    cfg.rollout_depth = parse_usize(key, value, line)?;
                    require(cfg.rollout_depth >= 1, key, line, "at least 1", value)?;
                }
                "robot_radius" => {
                    cfg.robot_radius = parse_f64(key, value, line)?;
                    require(cfg.robot_radius > 0.0, key, line, "positive", value)?;
                }
                "occ_threshold" => {
                    cfg.occ_threshold = parse_f64(key, value, line)?;
                    require(
                        cfg.occ_threshold > 0.0 && cfg.occ_threshold < 1.0,
                        key,
                        line,
                        "strictly between 0 and 1",
                        value,
                    )?;
                }
                "max_steps" => {
                    cfg.max_steps = parse_usize(key, value, line)?;
                    require(cfg.max_steps >= 1, key, line, "at least 1", value)?;
                }
                "entropy_fraction" => {
                    cfg.entropy_fraction = parse_f64(key, value, line)?;
                    require(
                        cfg.entropy_fraction > 0.0 && cfg.entropy_fraction <= 1.0,
                        key,
                        line,
                        "in (0, 1]",
                        value,
                    )?;
                }
                "dynamics_epsilon" => {
                    cfg.dynamics_epsilon = parse_f64(key, value, line)?;
                    require(cfg.dynamics_epsilon > 0.0, key, line, "positive", value)?;
                }
                "dynamics_patience" => {
                    cfg.dynamics_patience = parse_usize(key, value, line)?;
                    require(cfg.dynamics_patience >= 1, key, line, "at least 1", value)?;
                }
                "seed" => {
                    cfg.seed = value.parse::<u64>().map_err(|_| {
                        err(line, format!("seed: expected an unsigned integer, got {value:?}"))
                    })?;
                }
                "snapshot_every" => cfg.snapshot_every = parse_usize(key, value, line)?,
                other => return Err(err(line, format!("unknown key {other:?}"))),
            }
        }

        if !hull_margin_set {
            cfg.hull_margin = 2.0 * cfg.hinge_resolution;
        }
        Ok(cfg)
    }

    pub fn start_pose(&self) -> RobotPose {
        RobotPose::new(self.start_x, self.start_y, self.start_theta)
    }

    pub fn lidar(&self) -> LidarParams {
        LidarParams {
            fov: self.lidar_fov,
            n_beams: self.lidar_beams,
            max_range: self.lidar_max_range,
            noise_sigma: self.lidar_noise_sigma,
        }
    }

    /// Motion primitives in listed order (the planner expands in order).
    pub fn actions(&self) -> Vec<MotionPrimitive> {
        self.dthetas_deg
            .iter()
            .map(|&d| MotionPrimitive::new(self.arc_length, d.to_radians()))
            .collect()
    }

    pub fn search_params(&self) -> SearchParams {
        SearchParams {
            budget: self.budget,
            exploration_c: self.ucb_c,
            tree_depth: self.tree_depth,
            rollout_depth: self.rollout_depth,
            actions: self.actions(),
        }
    }
}

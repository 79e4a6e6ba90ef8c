//! Autonomous exploration of an unknown 2D world with a simulated lidar
//! robot.
//!
//! The map is a Bayesian Hilbert map: variational Bayesian logistic
//! regression over sparse RBF features centred on a fixed hinge lattice,
//! trained online from lidar returns and queried for calibrated occupancy
//! probabilities anywhere in the workspace. The planner is a Monte Carlo
//! tree search over short motion arcs that keeps vector-valued returns and
//! selects children through Pareto-front upper confidence bounds, trading
//! off map entropy against occupancy dynamics without scalarizing the two
//! objectives. An [`explorer::Explorer`] closes the loop: scan, update the
//! map, search, execute the first action of the best trajectory, repeat
//! until the map settles.

pub mod bhm;
pub mod config;
pub mod error;
pub mod explorer;
pub mod features;
pub mod geom;
pub mod io;
pub mod planner;
pub mod reward;
pub mod sim;

pub use bhm::{BhmModel, GlobalMapDb, TrainingPoint};
pub use config::ExplorationConfig;
pub use error::{Error, Result};
pub use explorer::{Explorer, StepRecord, StopReason};
pub use features::HingeGrid;
pub use geom::{Grid2, Point2, Rect};
pub use planner::{SearchParams, SearchResult, SearchTree};
pub use reward::OccupancyField;
pub use sim::{LidarParams, MotionPrimitive, RobotPose, WorldMap};

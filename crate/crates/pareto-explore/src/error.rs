use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },

    #[error("bounds are empty or inverted")]
    EmptyBounds,

    #[error("convex hull needs at least 3 non-collinear points")]
    DegenerateHull,

    #[error("no hinge points fall inside the active region")]
    EmptyActiveSet,

    #[error("training batch is empty")]
    EmptyBatch,

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("query point ({x}, {y}) is not a cell of the global map")]
    OffGrid { x: f64, y: f64 },

    #[error("grid layout mismatch: {0}")]
    GridMismatch(String),

    #[error("lidar needs at least one beam")]
    TooFewBeams,

    #[error("start pose lies inside an occupied cell")]
    OriginOccupied,

    #[error("no collision-free action from the current pose")]
    Trapped,

    #[error("world file {path}: {message}")]
    World { path: PathBuf, message: String },

    #[error("malformed {what}: {message}")]
    Format { what: &'static str, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

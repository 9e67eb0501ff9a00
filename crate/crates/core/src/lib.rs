//! Simulation engine for joint radar sensing and beam-based communication in
//! vehicular scenes: FMCW MIMO radar imaging, a reference target detector,
//! DFT codebook beam training, detection metrics and target-to-user
//! association.

pub mod assoc;
pub mod comm;
pub mod detect;
pub mod deteval;
pub mod error;
pub mod geometry;
pub mod radarsim;
pub mod rng;
pub mod scene;

pub use error::{Error, Result};
pub use geometry::{Direction, Pose, Vec3};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Number of vehicle classes a detector scores.
pub const N_CLASSES: usize = 3;

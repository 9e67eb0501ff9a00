//! Synthetic vehicular scenes: vehicle classes and scatterer layouts,
//! trajectories, preset road layouts, and ground-truth labels.

mod bbox;
mod config;
mod labels;
mod trajectory;
mod vehicle;

pub use bbox::{ground_truth_bbox, project_to_slant_plane, BboxFilter, BoundingBox};
pub use config::{
    advance_scenario, default_sensor, Scenario, ScenarioConfig, ScenarioGenerator, SceneBounds, ScenePreset,
    VehicleSpec, VehicleState, DEFAULT_DT_S,
};
pub use labels::{read_labels, write_labels, GroundTruthLabel};
pub use trajectory::{TrajectoryKind, TrajectoryModel};
pub use vehicle::{footprints_overlap, Scatterer, VehicleClass, VehicleTarget, SIDE_SPACING_M};

use crate::comm::{beam_training, BeamReport, ChannelRealization, CodebookPair};
use crate::error::Result;

/// SNR per antenna at which training labels are determined, dB.
pub const LABEL_SNR_DB: f64 = -10.0;

/// Beam pair (0-based `f_h`, `f_v`) chosen by exhaustive beam training at
/// `snr_db` for a VE's channel.
pub fn true_beam_indices(
    channel: &ChannelRealization,
    tx: &CodebookPair,
    rx: &CodebookPair,
    snr_db: f64,
    seed: u64,
) -> Result<(usize, usize)> {
    let report: BeamReport = beam_training(channel, tx, rx, snr_db, seed)?;
    Ok((report.f_h, report.f_v))
}

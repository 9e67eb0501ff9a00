//! One frame through scene → radar → detector → beam training → association.

use isac_core::assoc::{associate, link_detections, AssociationResult, FrameOutcome};
use isac_core::comm::{beam_training, generate_channel, ArrayGeometry, BeamReport, ChannelRealization, CodebookPair};
use isac_core::detect::{assign_beam_logits, BeamGeometry, Detection, ReferenceDetector};
use isac_core::geometry::{Pose, Vec3};
use isac_core::radarsim::{
    backproject_weighted, range_compress_windowed, synthesize_rx, PixelGrid, PointTarget, RadarArray, RadarImage,
    RadarWaveform, Window, DEFAULT_OVERSAMPLE,
};
use isac_core::rng::{self, purpose};
use isac_core::scene::{ground_truth_bbox, BboxFilter, BoundingBox, Scenario, VehicleClass};
use isac_core::Result;

use crate::config::ExperimentConfig;

/// Ground truth of one vehicle at one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleTruth {
    pub id: u32,
    pub class: VehicleClass,
    pub is_ve: bool,
    /// Roof antenna position with the vehicle heading.
    pub antenna: Pose,
    pub velocity: Vec3,
    /// `None` when no scatterer is visible in the image.
    pub bbox: Option<BoundingBox>,
}

/// Sensing half of a frame, shared by every array size and SNR.
#[derive(Debug, Clone)]
pub struct SensedFrame {
    pub frame: usize,
    pub detections: Vec<Detection>,
    pub vehicles: Vec<VehicleTruth>,
    /// VE behind each detection, if any.
    pub truth: Vec<Option<u32>>,
}

impl SensedFrame {
    pub fn ve_ids(&self) -> Vec<u32> {
        self.vehicles.iter().filter(|v| v.is_ve).map(|v| v.id).collect()
    }
}

/// Communication half of a frame for one array size and SNR.
#[derive(Debug, Clone)]
pub struct CommFrame {
    pub array_size: usize,
    pub snr_db: f64,
    pub detections: Vec<Detection>,
    pub reports: Vec<BeamReport>,
    pub association: AssociationResult,
    pub outcome: FrameOutcome,
}

/// Radar front end and detector, prepared once per experiment.
#[derive(Debug, Clone)]
pub struct Sensor {
    pub pose: Pose,
    pub waveform: RadarWaveform,
    pub array: RadarArray,
    pub grid: PixelGrid,
    pub fs_hz: f64,
    pub noise_sigma2: f64,
    pub range_window: Window,
    pub channel_weights: Vec<f64>,
    pub detector: ReferenceDetector,
    pub link_iou: f64,
}

impl Sensor {
    pub fn new(cfg: &ExperimentConfig, pose: Pose) -> Result<Self> {
        Ok(Self {
            pose,
            waveform: cfg.radar.waveform(),
            array: cfg.radar.array(pose),
            grid: cfg.radar.grid(pose)?,
            fs_hz: cfg.radar.fs_hz,
            noise_sigma2: cfg.radar.noise_sigma2(),
            range_window: cfg.radar.range_window,
            channel_weights: cfg.radar.aperture_window.planar_weights(cfg.radar.n_az, cfg.radar.n_el),
            detector: ReferenceDetector::new(cfg.detect),
            link_iou: cfg.assoc.link_iou,
        })
    }

    /// Radar image of the scene at step `frame`.
    pub fn image(&self, scenario: &Scenario, frame: usize, seed: u64) -> Result<(RadarImage, Vec<VehicleTruth>)> {
        let states = scenario.states_at(frame)?;
        let wavelength = self.waveform.wavelength();
        let mut points: Vec<PointTarget> = Vec::new();
        let mut vehicles = Vec::with_capacity(states.len());
        for (v, s) in scenario.targets.iter().zip(&states) {
            let pts = v.point_targets(&s.pose, s.velocity, self.pose.position, wavelength);
            let bbox = ground_truth_bbox(&pts, &self.pose, &self.grid, &BboxFilter::default()).ok();
            points.extend(pts);
            vehicles.push(VehicleTruth {
                id: v.id,
                class: v.class,
                is_ve: v.is_ve,
                antenna: Pose::new(v.antenna_position(&s.pose), s.pose.yaw),
                velocity: s.velocity,
                bbox,
            });
        }
        let k = frame as u64;
        let raw = synthesize_rx(&points, &self.waveform, &self.array, k, self.fs_hz, self.noise_sigma2, seed)?;
        let profiles = range_compress_windowed(&raw, &self.waveform, DEFAULT_OVERSAMPLE, self.range_window)?;
        let image =
            backproject_weighted(&profiles, &self.array, &self.waveform, &self.grid, k, Some(&self.channel_weights))?;
        Ok((image, vehicles))
    }

    /// Image, detections with beam logits for `geom`, and detection truth.
    pub fn sense(
        &self,
        scenario: &Scenario,
        frame: usize,
        seed: u64,
        geom: &BeamGeometry,
        codebooks: &CodebookPair,
    ) -> Result<(RadarImage, SensedFrame)> {
        let (image, vehicles) = self.image(scenario, frame, seed)?;
        let detections = self.detector.detect(&image, geom, codebooks);
        let truth = self.link(&detections, &vehicles);
        Ok((image, SensedFrame { frame, detections, vehicles, truth }))
    }

    /// Detections are linked against every vehicle, so a box that belongs to
    /// clutter is never credited to a nearby VE.
    pub fn link(&self, detections: &[Detection], vehicles: &[VehicleTruth]) -> Vec<Option<u32>> {
        let boxes: Vec<BoundingBox> = detections.iter().map(|d| d.bbox).collect();
        let gt: Vec<(u32, BoundingBox)> = vehicles.iter().filter_map(|v| v.bbox.map(|b| (v.id, b))).collect();
        link_detections(&boxes, &gt, self.link_iou)
            .into_iter()
            .map(|id| id.filter(|id| vehicles.iter().any(|v| v.id == *id && v.is_ve)))
            .collect()
    }
}

pub fn beam_geometry(bs_pose: Pose, n: usize, sharpness: f64) -> BeamGeometry {
    BeamGeometry { bs_pose, bs_array: ArrayGeometry::square(n), sharpness }
}

/// Channel of every VE in the frame. The channel stream does not depend on
/// the array size, so every size sees the same path amplitudes.
pub fn ve_channels(
    cfg: &ExperimentConfig,
    bs_pose: &Pose,
    sensed: &SensedFrame,
    n: usize,
    seed: u64,
) -> Vec<(u32, ChannelRealization)> {
    let model = cfg.comm.path_model();
    sensed
        .vehicles
        .iter()
        .filter(|v| v.is_ve)
        .map(|v| {
            let mut r = rng::stream(seed, &[purpose::CHANNEL, sensed.frame as u64, v.id as u64]);
            let ch = generate_channel(
                bs_pose,
                ArrayGeometry::square(n),
                &v.antenna,
                cfg.comm.ue_array(),
                v.velocity,
                &model,
                cfg.radar.f0_hz,
                &mut r,
            );
            (v.id, ch)
        })
        .collect()
}

/// Beam training and association for one array size at each SNR.
///
/// Training noise for a given VE reuses one stream across SNRs and only its
/// scale changes, so curves over SNR compare like with like.
pub fn communicate(
    cfg: &ExperimentConfig,
    sensor: &Sensor,
    sensed: &SensedFrame,
    n: usize,
    snrs: &[f64],
    seed: u64,
) -> Result<Vec<CommFrame>> {
    let tx = CodebookPair::dft(n, n);
    let rx = CodebookPair::dft(cfg.comm.ue_n_h, cfg.comm.ue_n_v);
    let geom = beam_geometry(sensor.pose, n, cfg.detect.sharpness);
    let mut detections = sensed.detections.clone();
    for d in &mut detections {
        assign_beam_logits(d, &sensor.grid, &geom, &tx)?;
    }
    let channels = ve_channels(cfg, &sensor.pose, sensed, n, seed);
    let ve_ids = sensed.ve_ids();
    let mut out = Vec::with_capacity(snrs.len());
    for &snr in snrs {
        let mut reports = Vec::with_capacity(channels.len());
        for (id, ch) in &channels {
            let s = rng::derive_seed(seed, &[purpose::TRAINING, sensed.frame as u64, *id as u64, n as u64]);
            let mut rep = beam_training(ch, &tx, &rx, snr, s)?;
            rep.ve_id = *id;
            rep.frame = sensed.frame;
            reports.push(rep);
        }
        let association = associate(&detections, &reports, cfg.assoc.cost, cfg.assoc.gate)?;
        let pairs = association
            .assignment
            .pairs
            .iter()
            .map(|&(k, v)| (k, association.cost.v_ids[v]))
            .collect();
        let outcome = FrameOutcome { pairs, truth: sensed.truth.clone(), ve_ids: ve_ids.clone() };
        out.push(CommFrame { array_size: n, snr_db: snr, detections: detections.clone(), reports, association, outcome });
    }
    Ok(out)
}

use std::f64::consts::PI;
use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use isac_core::assoc::CostKind;
use isac_core::comm::{ArrayGeometry, PathModel};
use isac_core::detect::DetectorConfig;
use isac_core::geometry::Pose;
use isac_core::radarsim::{Axis, ChirpConvention, PixelGrid, RadarArray, RadarWaveform, Window};
use isac_core::scene::{default_sensor, SceneBounds, ScenePreset, ScenarioGenerator};

pub const ALLOWED_ARRAY_SIZES: [usize; 6] = [2, 4, 8, 16, 32, 64];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub preset: ScenePreset,
    pub n_ve: usize,
    pub n_clutter: usize,
    pub frames: usize,
    pub dt_s: f64,
    pub min_gap_m: f64,
    pub class_mix: [f64; 3],
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            preset: ScenePreset::Mixed,
            n_ve: 2,
            n_clutter: 5,
            frames: 1,
            dt_s: 0.1,
            min_gap_m: 1.5,
            class_mix: [0.45, 0.40, 0.15],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadarSection {
    pub f0_hz: f64,
    pub bandwidth_hz: f64,
    pub chirp_s: f64,
    pub pri_s: f64,
    pub fs_hz: f64,
    pub convention: ChirpConvention,
    pub n_az: usize,
    pub n_el: usize,
    /// Element spacing in wavelengths.
    pub spacing: f64,
    /// Per-sample SNR of a 1 m² reference scatterer at 30 m on boresight, dB.
    /// `None` disables receiver noise.
    pub snr_db: Option<f64>,
    pub range_min_m: f64,
    pub range_max_m: f64,
    pub range_bins: usize,
    pub angle_min_rad: f64,
    pub angle_max_rad: f64,
    pub angle_bins: usize,
    pub surface_height_m: f64,
    pub dynamic_range_db: f64,
    /// Fast-time taper applied before range compression.
    pub range_window: Window,
    /// Aperture taper applied across channels in back-projection.
    pub aperture_window: Window,
}

impl Default for RadarSection {
    fn default() -> Self {
        Self {
            f0_hz: 28e9,
            bandwidth_hz: 800e6,
            chirp_s: 20e-6,
            pri_s: 25e-6,
            fs_hz: 40e6,
            convention: ChirpConvention::FullSweep,
            n_az: 128,
            n_el: 1,
            spacing: 0.5,
            snr_db: Some(-10.0),
            range_min_m: 13.0,
            range_max_m: 58.0,
            range_bins: 256,
            angle_min_rad: -0.75,
            angle_max_rad: 0.75,
            angle_bins: 64,
            surface_height_m: 0.8,
            dynamic_range_db: 60.0,
            range_window: Window::Hamming,
            aperture_window: Window::Hamming,
        }
    }
}

impl RadarSection {
    pub fn waveform(&self) -> RadarWaveform {
        RadarWaveform {
            f0_hz: self.f0_hz,
            bandwidth_hz: self.bandwidth_hz,
            chirp_s: self.chirp_s,
            pri_s: self.pri_s,
            amplitude: 1.0,
            convention: self.convention,
        }
    }

    pub fn array(&self, sensor: Pose) -> RadarArray {
        let d = self.spacing * self.waveform().wavelength();
        RadarArray::planar(sensor, self.n_az, self.n_el, d)
    }

    pub fn grid(&self, sensor: Pose) -> isac_core::Result<PixelGrid> {
        PixelGrid::new(
            Axis::spanning(self.range_min_m, self.range_max_m, self.range_bins),
            Axis::spanning(self.angle_min_rad, self.angle_max_rad, self.angle_bins),
            sensor,
            self.surface_height_m,
        )
    }

    /// Receiver noise variance per dechirped sample.
    pub fn noise_sigma2(&self) -> f64 {
        let Some(snr_db) = self.snr_db else {
            return 0.0;
        };
        let lambda = self.waveform().wavelength();
        let r: f64 = 30.0;
        let ref_power = (4.0 * PI).powi(-3) * lambda * lambda / r.powi(4);
        ref_power * 10f64.powf(-snr_db / 10.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommSection {
    /// Square base-station array sizes `N` (an `N × N` array each).
    pub array_sizes: Vec<usize>,
    pub ue_n_h: usize,
    pub ue_n_v: usize,
    /// SNR per antenna grid, dB.
    pub snr_db: Vec<f64>,
    pub ground_bounce: bool,
    pub bounce_share: f64,
    pub rayleigh: bool,
}

impl Default for CommSection {
    fn default() -> Self {
        Self {
            array_sizes: vec![2, 8, 32],
            ue_n_h: 2,
            ue_n_v: 2,
            snr_db: vec![-55.0, -50.0, -45.0, -40.0, -35.0, -30.0, -25.0, -20.0, -15.0, -10.0],
            ground_bounce: true,
            bounce_share: 0.1,
            rayleigh: true,
        }
    }
}

impl CommSection {
    pub fn path_model(&self) -> PathModel {
        PathModel { ground_bounce: self.ground_bounce, bounce_share: self.bounce_share, rayleigh: self.rayleigh }
    }

    pub fn ue_array(&self) -> ArrayGeometry {
        ArrayGeometry::roof(self.ue_n_h, self.ue_n_v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssocSection {
    pub cost: CostKind,
    pub gate: Option<f64>,
    pub exclude_undetected: bool,
    /// IoU needed to link a detection to a ground-truth vehicle.
    pub link_iou: f64,
}

impl Default for AssocSection {
    fn default() -> Self {
        Self { cost: CostKind::Cce, gate: None, exclude_undetected: false, link_iou: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub seed: u64,
    pub trials: usize,
    /// Clutter counts of the clutter sweep.
    pub clutter_counts: Vec<usize>,
    pub clutter_n_ve: usize,
    /// Fixed SNR of the clutter sweep and the matrix, dB.
    pub fixed_snr_db: f64,
    pub matrix_n_ve: Vec<usize>,
    pub matrix_clutter: Vec<usize>,
    pub matrix_array: usize,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            seed: 1,
            trials: 50,
            clutter_counts: vec![0, 1, 2, 3, 4, 5],
            clutter_n_ve: 2,
            fixed_snr_db: -20.0,
            matrix_n_ve: vec![1, 2, 3, 4],
            matrix_clutter: vec![0, 1, 3, 5],
            matrix_array: 8,
        }
    }
}

/// Full experiment description, read from TOML.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioSection,
    pub radar: RadarSection,
    pub comm: CommSection,
    pub detect: DetectorConfig,
    pub assoc: AssocSection,
    pub experiment: ExperimentSection,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        let c = &self.comm;
        if c.array_sizes.is_empty() || c.snr_db.is_empty() {
            bail!("array_sizes and snr_db must be nonempty");
        }
        for n in c.array_sizes.iter().chain([&self.experiment.matrix_array]) {
            if !ALLOWED_ARRAY_SIZES.contains(n) {
                bail!("array size {n} is not one of {ALLOWED_ARRAY_SIZES:?}");
            }
        }
        if c.ue_n_h == 0 || c.ue_n_v == 0 {
            bail!("UE array must have at least one element per axis");
        }
        if c.snr_db.iter().any(|s| !s.is_finite()) {
            bail!("SNR grid must be finite");
        }
        let s = &self.scenario;
        if s.frames == 0 || !(s.dt_s > 0.0) {
            bail!("frames must be positive and dt_s > 0");
        }
        if s.n_ve == 0 || s.n_ve > 4 || self.experiment.clutter_n_ve == 0 || self.experiment.clutter_n_ve > 4 {
            bail!("n_ve must lie in 1..=4");
        }
        if self.experiment.matrix_n_ve.iter().any(|&n| n == 0 || n > 4) {
            bail!("matrix_n_ve entries must lie in 1..=4");
        }
        if self.experiment.trials == 0 {
            bail!("trials must be positive");
        }
        if self.experiment.clutter_counts.is_empty() || self.experiment.matrix_n_ve.is_empty() || self.experiment.matrix_clutter.is_empty() {
            bail!("sweep grids must be nonempty");
        }
        let r = &self.radar;
        if r.n_az == 0 || r.n_el == 0 || r.range_bins == 0 || r.angle_bins == 0 {
            bail!("radar array and image grid must be nonempty");
        }
        r.waveform().validate()?;
        r.grid(default_sensor())?;
        if !self.detect.cfar.validate() {
            bail!("invalid CFAR settings");
        }
        Ok(())
    }

    /// Scenario generator for the given vehicle counts.
    pub fn generator(&self, n_ve: usize, n_clutter: usize) -> ScenarioGenerator {
        let s = &self.scenario;
        ScenarioGenerator {
            preset: s.preset,
            n_ve,
            n_clutter,
            duration_s: (s.frames - 1) as f64 * s.dt_s,
            dt_s: s.dt_s,
            min_gap_m: s.min_gap_m,
            bounds: SceneBounds::default(),
            class_mix: s.class_mix,
        }
    }

    /// SHA-256 of the canonical TOML serialization.
    pub fn spec_hash(&self) -> [u8; 32] {
        let text = toml::to_string(self).expect("config serializes");
        Sha256::digest(text.as_bytes()).into()
    }
}

use std::f64::consts::{FRAC_PI_2, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::trajectory::TrajectoryModel;
use super::vehicle::{footprints_overlap, VehicleClass, VehicleTarget};
use crate::error::{Error, Result};
use crate::geometry::{Pose, Vec3};
use crate::rng::{self, purpose, SimRng};

pub const DEFAULT_DT_S: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenePreset {
    /// Two-way straight road crossing the field of view.
    StraightRoad,
    Roundabout,
    Intersection,
    /// One of the three above, chosen per scenario seed.
    Mixed,
}

impl ScenePreset {
    pub fn resolve(self, seed: u64) -> ScenePreset {
        match self {
            ScenePreset::Mixed => {
                [ScenePreset::StraightRoad, ScenePreset::Roundabout, ScenePreset::Intersection]
                    [(rng::derive_seed(seed, &[purpose::SCENARIO, 0]) % 3) as usize]
            }
            p => p,
        }
    }
}

/// Region every scatterer must stay in, relative to the sensor pose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneBounds {
    pub min_range_m: f64,
    pub max_range_m: f64,
    pub max_azimuth_rad: f64,
}

impl Default for SceneBounds {
    fn default() -> Self {
        Self { min_range_m: 14.0, max_range_m: 56.0, max_azimuth_rad: 0.7 }
    }
}

impl SceneBounds {
    pub fn contains(&self, sensor: &Pose, p: Vec3) -> bool {
        let local = sensor.to_local(p);
        let r = local.norm();
        r >= self.min_range_m && r <= self.max_range_m && local.y.atan2(local.x).abs() <= self.max_azimuth_rad
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleSpec {
    pub class: VehicleClass,
    pub trajectory: TrajectoryModel,
    pub is_ve: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub duration_s: f64,
    pub dt_s: f64,
    pub seed: u64,
    /// Co-located radar and base-station pose.
    pub sensor: Pose,
    pub bounds: SceneBounds,
    pub vehicles: Vec<VehicleSpec>,
}

impl ScenarioConfig {
    pub fn empty(seed: u64) -> Self {
        Self {
            duration_s: 0.0,
            dt_s: DEFAULT_DT_S,
            seed,
            sensor: default_sensor(),
            bounds: SceneBounds::default(),
            vehicles: Vec::new(),
        }
    }

    /// Number of valid time steps, `t = 0..=floor(duration / dt)`.
    pub fn steps(&self) -> usize {
        (self.duration_s / self.dt_s + 1e-9).floor() as usize + 1
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt_s > 0.0) || !(self.duration_s >= 0.0) {
            return Err(Error::InvalidConfig("dt must be positive and duration nonnegative".into()));
        }
        for v in &self.vehicles {
            v.trajectory.validate()?;
        }
        Ok(())
    }
}

pub fn default_sensor() -> Pose {
    Pose::new(Vec3::new(0.0, 0.0, 5.0), 0.0)
}

/// Random scenario generation on one of the preset road layouts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioGenerator {
    pub preset: ScenePreset,
    pub n_ve: usize,
    pub n_clutter: usize,
    pub duration_s: f64,
    pub dt_s: f64,
    /// Minimum clearance between vehicle footprints, m.
    pub min_gap_m: f64,
    pub bounds: SceneBounds,
    /// Relative frequencies of sedan, hatchback and truck.
    pub class_mix: [f64; 3],
}

impl Default for ScenarioGenerator {
    fn default() -> Self {
        Self {
            preset: ScenePreset::StraightRoad,
            n_ve: 2,
            n_clutter: 0,
            duration_s: 1.9,
            dt_s: DEFAULT_DT_S,
            min_gap_m: 1.5,
            bounds: SceneBounds::default(),
            class_mix: [0.45, 0.40, 0.15],
        }
    }
}

const MAX_ATTEMPTS: usize = 4000;

impl ScenarioGenerator {
    pub fn generate(&self, seed: u64) -> Result<ScenarioConfig> {
        let preset = self.preset.resolve(seed);
        let mut r = rng::stream(seed, &[purpose::SCENARIO, 1]);
        let mut cfg = ScenarioConfig {
            duration_s: self.duration_s,
            dt_s: self.dt_s,
            seed,
            sensor: default_sensor(),
            bounds: self.bounds,
            vehicles: Vec::new(),
        };
        cfg.validate()?;
        let times: Vec<f64> = (0..cfg.steps()).map(|t| t as f64 * cfg.dt_s).collect();
        let mut placed: Vec<VehicleTarget> = Vec::new();
        for idx in 0..self.n_ve + self.n_clutter {
            let is_ve = idx < self.n_ve;
            let mut ok = false;
            for _ in 0..MAX_ATTEMPTS {
                let class = self.draw_class(&mut r);
                let trajectory = draw_trajectory(preset, &mut r);
                let cand = VehicleTarget::new(idx as u32, class, trajectory, is_ve, seed);
                if self.admissible(&cand, &placed, &cfg.sensor, &times) {
                    placed.push(cand);
                    cfg.vehicles.push(VehicleSpec { class, trajectory, is_ve });
                    ok = true;
                    break;
                }
            }
            if !ok {
                return Err(Error::InvalidConfig(format!(
                    "could not place vehicle {idx} of {} without overlap",
                    self.n_ve + self.n_clutter
                )));
            }
        }
        Ok(cfg)
    }

    fn draw_class(&self, r: &mut SimRng) -> VehicleClass {
        let total: f64 = self.class_mix.iter().sum();
        let mut u = r.gen::<f64>() * total;
        for (i, w) in self.class_mix.iter().enumerate() {
            if u < *w {
                return VehicleClass::ALL[i];
            }
            u -= w;
        }
        VehicleClass::Sedan
    }

    fn admissible(&self, cand: &VehicleTarget, placed: &[VehicleTarget], sensor: &Pose, times: &[f64]) -> bool {
        for &t in times {
            let pose = cand.trajectory.pose_at(t);
            let (_, _, h) = cand.class.extent();
            for c in cand.footprint(&pose) {
                if !self.bounds.contains(sensor, c) || !self.bounds.contains(sensor, c + Vec3::new(0.0, 0.0, h)) {
                    return false;
                }
            }
            for other in placed {
                let op = other.trajectory.pose_at(t);
                if footprints_overlap(cand, &pose, other, &op, self.min_gap_m) {
                    return false;
                }
            }
        }
        true
    }
}

fn draw_trajectory(preset: ScenePreset, r: &mut SimRng) -> TrajectoryModel {
    let speed = r.gen_range(2.0..7.0);
    match preset {
        ScenePreset::StraightRoad | ScenePreset::Mixed => {
            // Lanes at x = 18, 22 northbound and 30, 34 southbound.
            let lane = r.gen_range(0..4usize);
            let x = [18.0, 22.0, 30.0, 34.0][lane];
            let heading = if lane < 2 { FRAC_PI_2 } else { -FRAC_PI_2 };
            let y = r.gen_range(-22.0..22.0);
            TrajectoryModel::straight(Vec3::new(x, y, 0.0), heading, speed)
        }
        ScenePreset::Roundabout => {
            let centre = Vec3::new(32.0, 0.0, 0.0);
            let radius = [9.5, 13.0][r.gen_range(0..2usize)];
            let phi = r.gen_range(0.0..TAU);
            let start = centre + Vec3::new(phi.cos(), phi.sin(), 0.0) * radius;
            TrajectoryModel::roundabout(start, phi + FRAC_PI_2, speed, radius)
        }
        ScenePreset::Intersection => {
            // Four approaches to a junction at (30, 0), right-hand traffic.
            let centre = Vec3::new(30.0, 0.0, 0.0);
            let approach = r.gen_range(0..4usize);
            let heading = approach as f64 * FRAC_PI_2;
            let back = Vec3::new(-heading.cos(), -heading.sin(), 0.0);
            let right = Vec3::new(heading.sin(), -heading.cos(), 0.0);
            let dist = r.gen_range(4.0..24.0);
            let start = centre + back * dist + right * 1.75;
            match r.gen_range(0..3usize) {
                0 => TrajectoryModel::straight(start, heading, speed),
                1 => TrajectoryModel::intersection(start, heading, speed, (dist - 3.5).max(0.0), 5.25),
                _ => TrajectoryModel::intersection(start, heading, speed, (dist - 3.5).max(0.0), -1.75),
            }
        }
    }
}

/// Vehicles of a scenario, built once; poses are evaluated on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub targets: Vec<VehicleTarget>,
}

/// A vehicle at one time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    pub pose: Pose,
    pub velocity: Vec3,
}

impl Scenario {
    pub fn build(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let targets = config
            .vehicles
            .iter()
            .enumerate()
            .map(|(i, v)| VehicleTarget::new(i as u32, v.class, v.trajectory, v.is_ve, config.seed))
            .collect();
        Ok(Self { config, targets })
    }

    pub fn states_at(&self, t: usize) -> Result<Vec<VehicleState>> {
        let steps = self.config.steps();
        if t >= steps {
            return Err(Error::OutOfDuration { step: t, steps });
        }
        let time = t as f64 * self.config.dt_s;
        Ok(self
            .targets
            .iter()
            .map(|v| VehicleState { pose: v.trajectory.pose_at(time), velocity: v.trajectory.velocity_at(time) })
            .collect())
    }
}

/// Every vehicle of the scenario with its pose at step `t`.
pub fn advance_scenario(config: &ScenarioConfig, t: usize) -> Result<Vec<(VehicleTarget, Pose)>> {
    let scenario = Scenario::build(config.clone())?;
    let states = scenario.states_at(t)?;
    Ok(scenario.targets.into_iter().zip(states).map(|(v, s)| (v, s.pose)).collect())
}


#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn single(trajectory: TrajectoryModel, duration_s: f64, dt_s: f64) -> ScenarioConfig {
        ScenarioConfig {
            duration_s,
            dt_s,
            vehicles: vec![VehicleSpec { class: VehicleClass::Sedan, trajectory, is_ve: true }],
            ..ScenarioConfig::empty(1)
        }
    }

    #[test]
    fn straight_road_step() {
        let cfg = single(TrajectoryModel::straight(Vec3::ZERO, 0.0, 10.0), 2.0, 0.1);
        let out = advance_scenario(&cfg, 10).unwrap();
        assert!(out[0].1.position.distance(Vec3::new(10.0, 0.0, 0.0)) < 1e-12);
    }

    #[test]
    fn parked_vehicle_stays() {
        let start = Vec3::new(3.0, -4.0, 0.0);
        let cfg = single(TrajectoryModel::straight(start, 1.0, 0.0), 5.0, 0.1);
        for t in [0, 7, 50] {
            assert_eq!(advance_scenario(&cfg, t).unwrap()[0].1.position, start);
        }
    }

    #[test]
    fn roundabout_quarter_circle() {
        // Quarter circle of radius 20 at 10 m/s takes π s = 100 steps of π/100.
        let start = Vec3::new(20.0, 0.0, 0.0);
        let cfg = single(TrajectoryModel::roundabout(start, PI / 2.0, 10.0, 20.0), PI, PI / 100.0);
        let pose = advance_scenario(&cfg, 100).unwrap()[0].1;
        assert!((pose.position.norm() - 20.0).abs() < 1e-9);
        assert!((pose.yaw - PI).abs() < 1e-12);
        assert!(pose.position.distance(Vec3::new(0.0, 20.0, 0.0)) < 1e-9);
    }

    #[test]
    fn out_of_duration() {
        let cfg = single(TrajectoryModel::straight(Vec3::ZERO, 0.0, 1.0), 1.0, 0.1);
        assert!(advance_scenario(&cfg, 10).is_ok());
        assert!(matches!(advance_scenario(&cfg, 11), Err(Error::OutOfDuration { step: 11, steps: 11 })));
    }

    #[test]
    fn generated_scenarios_are_deterministic_and_clear() {
        for preset in [ScenePreset::StraightRoad, ScenePreset::Roundabout, ScenePreset::Intersection] {
            let g = ScenarioGenerator { preset, n_ve: 2, n_clutter: 5, ..Default::default() };
            let a = g.generate(77).unwrap();
            assert_eq!(a, g.generate(77).unwrap());
            assert_eq!(a.vehicles.len(), 7);
            assert_eq!(a.vehicles.iter().filter(|v| v.is_ve).count(), 2);
            let sc = Scenario::build(a).unwrap();
            for t in 0..sc.config.steps() {
                let states = sc.states_at(t).unwrap();
                for (i, (va, sa)) in sc.targets.iter().zip(&states).enumerate() {
                    for c in va.footprint(&sa.pose) {
                        assert!(sc.config.bounds.contains(&sc.config.sensor, c));
                    }
                    for (vb, sb) in sc.targets.iter().zip(&states).skip(i + 1) {
                        assert!(!footprints_overlap(va, &sa.pose, vb, &sb.pose, 1.0));
                    }
                }
            }
        }
    }
}

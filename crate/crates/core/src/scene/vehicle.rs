use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::trajectory::TrajectoryModel;
use crate::geometry::{Pose, Vec3};
use crate::radarsim::PointTarget;
use crate::rng::{self, purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VehicleClass {
    Sedan,
    Hatchback,
    Truck,
}

impl VehicleClass {
    pub const ALL: [VehicleClass; 3] = [VehicleClass::Sedan, VehicleClass::Hatchback, VehicleClass::Truck];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// (length, width, height) in metres.
    pub fn extent(self) -> (f64, f64, f64) {
        match self {
            VehicleClass::Sedan => (4.7, 1.8, 1.45),
            VehicleClass::Hatchback => (4.1, 1.75, 1.5),
            VehicleClass::Truck => (8.0, 2.5, 3.2),
        }
    }

    /// RCS of a body corner, m². Other scatterers are fractions of this.
    pub fn rcs_scale(self) -> f64 {
        match self {
            VehicleClass::Sedan => 3.0,
            VehicleClass::Hatchback => 2.5,
            VehicleClass::Truck => 8.0,
        }
    }

    /// Body-frame scatterer layout: (offset, RCS factor). Body corners, side
    /// panels sampled at most [`SIDE_SPACING_M`] apart, bumpers and roof.
    pub fn template(self) -> Vec<(Vec3, f64)> {
        let (l, w, h) = self.extent();
        let mut out = Vec::new();
        for sx in [1.0, -1.0] {
            for sy in [1.0, -1.0] {
                out.push((Vec3::new(sx * l / 2.0, sy * w / 2.0, 0.5), 1.0));
            }
        }
        let segments = (l / SIDE_SPACING_M).ceil() as usize;
        for sy in [1.0, -1.0] {
            for i in 1..segments {
                let x = -l / 2.0 + l * i as f64 / segments as f64;
                out.push((Vec3::new(x, sy * w / 2.0, if i % 2 == 0 { 0.7 } else { 0.35 }), 0.5));
            }
        }
        for sx in [1.0, -1.0] {
            out.push((Vec3::new(sx * l / 2.0, 0.0, 0.6), 0.7));
        }
        for sx in [1.0, -1.0] {
            out.push((Vec3::new(sx * 0.15 * l, 0.0, h), 0.4));
        }
        out
    }
}

/// Largest gap between neighbouring side-panel scatterers, m.
pub const SIDE_SPACING_M: f64 = 1.2;

/// Point reflector attached to a vehicle body.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scatterer {
    pub offset: Vec3,
    pub rcs: f64,
    /// Reflection phase in `[0, 2π)`, fixed for the lifetime of the scenario.
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleTarget {
    pub id: u32,
    pub class: VehicleClass,
    pub trajectory: TrajectoryModel,
    pub scatterers: Vec<Scatterer>,
    pub is_ve: bool,
}

impl VehicleTarget {
    /// Builds the class template with scatterer phases drawn from `seed`.
    pub fn new(id: u32, class: VehicleClass, trajectory: TrajectoryModel, is_ve: bool, seed: u64) -> Self {
        let mut r = rng::stream(seed, &[purpose::SCATTER_PHASE, id as u64]);
        let scatterers = class
            .template()
            .into_iter()
            .map(|(offset, f)| Scatterer { offset, rcs: f * class.rcs_scale(), phase: r.gen_range(0.0..TAU) })
            .collect();
        Self { id, class, trajectory, scatterers, is_ve }
    }

    /// Antenna position of a VE: centre of the roof.
    pub fn antenna_position(&self, pose: &Pose) -> Vec3 {
        pose.to_world(Vec3::new(0.0, 0.0, self.class.extent().2))
    }

    /// Scatterers at `pose` as radar point targets. Doppler uses the radial
    /// velocity with respect to `radar` (positive when approaching).
    pub fn point_targets(&self, pose: &Pose, velocity: Vec3, radar: Vec3, wavelength: f64) -> Vec<PointTarget> {
        self.scatterers
            .iter()
            .map(|s| {
                let position = pose.to_world(s.offset);
                let los = radar - position;
                let radial = if los.norm() > 0.0 { velocity.dot(los) / los.norm() } else { 0.0 };
                PointTarget { position, rcs: s.rcs, phase: s.phase, doppler_hz: 2.0 * radial / wavelength }
            })
            .collect()
    }

    /// Footprint corners on the ground, counter-clockwise.
    pub fn footprint(&self, pose: &Pose) -> [Vec3; 4] {
        let (l, w, _) = self.class.extent();
        [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)]
            .map(|(sx, sy)| pose.to_world(Vec3::new(sx * l / 2.0, sy * w / 2.0, 0.0)))
    }
}

/// Separating-axis test between two vehicle footprints grown by `margin`.
pub fn footprints_overlap(a: &VehicleTarget, pa: &Pose, b: &VehicleTarget, pb: &Pose, margin: f64) -> bool {
    let ext = |v: &VehicleTarget| {
        let (l, w, _) = v.class.extent();
        (l / 2.0 + margin / 2.0, w / 2.0 + margin / 2.0)
    };
    let (al, aw) = ext(a);
    let (bl, bw) = ext(b);
    let axes = [pa.yaw, pa.yaw + std::f64::consts::FRAC_PI_2, pb.yaw, pb.yaw + std::f64::consts::FRAC_PI_2];
    let d = pb.position - pa.position;
    for ang in axes {
        let (s, c) = ang.sin_cos();
        let radius = |half_l: f64, half_w: f64, yaw: f64| {
            half_l * (yaw - ang).cos().abs() + half_w * (yaw - ang).sin().abs()
        };
        let sep = (d.x * c + d.y * s).abs();
        if sep > radius(al, aw, pa.yaw) + radius(bl, bw, pb.yaw) {
            return false;
        }
    }
    true
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Pose, Vec3};

/// Uniformly spaced, strictly increasing sample axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl Axis {
    pub fn new(start: f64, step: f64, len: usize) -> Self {
        Self { start, step, len }
    }

    /// `len` samples covering `[first, last]` inclusive.
    pub fn spanning(first: f64, last: f64, len: usize) -> Self {
        let step = if len > 1 { (last - first) / (len as f64 - 1.0) } else { 1.0 };
        Self { start: first, step, len }
    }

    pub fn value(&self, i: f64) -> f64 {
        self.start + i * self.step
    }

    /// Fractional sample index of `v`.
    pub fn index_of(&self, v: f64) -> f64 {
        (v - self.start) / self.step
    }

    pub fn last(&self) -> f64 {
        self.value(self.len as f64 - 1.0)
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.value(i as f64)).collect()
    }
}

/// Range–angle pixel grid on the radar slant surface.
///
/// Pixel `(row, col)` is the world point at slant range `ranges[row]` and
/// horizontal azimuth `angles[col]` (radar frame) lying at height
/// `surface_height`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelGrid {
    pub ranges: Axis,
    pub angles: Axis,
    pub origin: Pose,
    pub surface_height: f64,
}

impl PixelGrid {
    pub fn new(ranges: Axis, angles: Axis, origin: Pose, surface_height: f64) -> Result<Self> {
        let grid = Self { ranges, angles, origin, surface_height };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, axis) in [("range", &self.ranges), ("angle", &self.angles)] {
            if axis.len == 0 || !(axis.step > 0.0) || !axis.start.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} axis must be nonempty and strictly increasing")));
            }
        }
        if self.ranges.start <= 0.0 {
            return Err(Error::InvalidConfig("range axis must start above zero".into()));
        }
        Ok(())
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.ranges.len, self.angles.len)
    }

    /// World point at a (possibly fractional) slant range and azimuth, or
    /// `None` when the surface is not reachable at that range.
    pub fn point_at(&self, range: f64, azimuth: f64) -> Option<Vec3> {
        let dz = self.surface_height - self.origin.position.z;
        let horizontal_sq = range * range - dz * dz;
        if horizontal_sq < 0.0 {
            return None;
        }
        let horizontal = horizontal_sq.sqrt();
        let local = Vec3::new(horizontal * azimuth.cos(), horizontal * azimuth.sin(), dz);
        Some(self.origin.to_world(local))
    }

    pub fn world_point(&self, row: usize, col: usize) -> Option<Vec3> {
        self.point_at(self.ranges.value(row as f64), self.angles.value(col as f64))
    }

    /// Slant range and azimuth at fractional pixel coordinates.
    pub fn polar_at(&self, row: f64, col: f64) -> (f64, f64) {
        (self.ranges.value(row), self.angles.value(col))
    }

    /// Fractional `(row, col)` of a slant range / azimuth pair.
    pub fn pixel_of(&self, range: f64, azimuth: f64) -> (f64, f64) {
        (self.ranges.index_of(range), self.angles.index_of(azimuth))
    }

    pub fn contains_pixel(&self, row: f64, col: f64) -> bool {
        let (h, w) = self.shape();
        row >= -0.5 && row <= h as f64 - 0.5 && col >= -0.5 && col <= w as f64 - 0.5
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Pose;
use crate::radarsim::{PixelGrid, PointTarget};
use crate::Vec3;

/// Axis-aligned box in normalized image coordinates: `x` along columns
/// (angle), `y` along rows (range), both in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    /// Box spanning `[x0, x1] × [y0, y1]`, clamped to the unit square.
    pub fn from_corners(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        let (x0, x1) = (x0.clamp(0.0, 1.0), x1.clamp(0.0, 1.0));
        let (y0, y1) = (y0.clamp(0.0, 1.0), y1.clamp(0.0, 1.0));
        Self { x: (x0 + x1) / 2.0, y: (y0 + y1) / 2.0, w: x1 - x0, h: y1 - y0 }
    }

    /// `(x0, y0, x1, y1)`.
    pub fn corners(&self) -> (f64, f64, f64, f64) {
        (self.x - self.w / 2.0, self.y - self.h / 2.0, self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn is_valid(&self) -> bool {
        let (x0, y0, x1, y1) = self.corners();
        let tol = 1e-12;
        self.w > 0.0 && self.h > 0.0 && x0 >= -tol && y0 >= -tol && x1 <= 1.0 + tol && y1 <= 1.0 + tol
    }

    /// Box centre in fractional pixel coordinates `(row, col)`.
    pub fn center_pixel(&self, grid: &PixelGrid) -> (f64, f64) {
        let (n_r, n_a) = grid.shape();
        (self.y * n_r as f64, self.x * n_a as f64)
    }
}

/// Slant range and azimuth of `point` seen from `radar`.
///
/// Azimuth is the horizontal angle from the radar boresight towards its left
/// (+y), the same angle that indexes image columns.
pub fn project_to_slant_plane(point: Vec3, radar: &Pose) -> Result<(f64, f64)> {
    let local = radar.to_local(point);
    let range = local.norm();
    if range < 1e-9 {
        return Err(Error::DegenerateGeometry("point coincides with the radar".into()));
    }
    Ok((range, local.y.atan2(local.x)))
}

/// Scatterer filters applied before boxing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BboxFilter {
    /// Scatterers whose echo power falls more than this many dB below the
    /// strongest one are dropped.
    pub power_floor_db: f64,
    /// Scatterers farther than this from the vehicle centroid are dropped.
    pub distance_cap_m: f64,
    /// Minimum box side in pixels.
    pub min_size_px: f64,
}

impl Default for BboxFilter {
    fn default() -> Self {
        Self { power_floor_db: 25.0, distance_cap_m: 6.0, min_size_px: 2.0 }
    }
}

impl BboxFilter {
    pub fn none() -> Self {
        Self { power_floor_db: f64::INFINITY, distance_cap_m: f64::INFINITY, ..Self::default() }
    }
}

/// Minimal box enclosing the image projections of the surviving scatterers.
///
/// Echo power is ranked by `Γ / (R_tx² R_rx²)` with a monostatic radar, the
/// geometric part of the scattering amplitude. The strongest scatterer and
/// the centroid are taken over the full set, so relaxing either filter can
/// only grow the box. Scatterers projecting outside the grid are ignored.
pub fn ground_truth_bbox(
    scatterers: &[PointTarget],
    radar: &Pose,
    grid: &PixelGrid,
    filter: &BboxFilter,
) -> Result<BoundingBox> {
    if scatterers.is_empty() {
        return Err(Error::NoVisibleTarget);
    }
    let n = scatterers.len() as f64;
    let centroid = scatterers.iter().fold(Vec3::ZERO, |acc, s| acc + s.position) * (1.0 / n);
    let mut powers = Vec::with_capacity(scatterers.len());
    for s in scatterers {
        let r = s.position.distance(radar.position);
        if r < 1e-9 {
            return Err(Error::DegenerateGeometry("scatterer at the radar".into()));
        }
        powers.push(s.rcs / r.powi(4));
    }
    let p_max = powers.iter().cloned().fold(0.0, f64::max);
    let floor = p_max * 10f64.powf(-filter.power_floor_db / 10.0);

    let (n_r, n_a) = grid.shape();
    let mut bounds: Option<(f64, f64, f64, f64)> = None;
    for (s, &p) in scatterers.iter().zip(&powers) {
        if p_max <= 0.0 || p < floor || s.position.distance(centroid) > filter.distance_cap_m {
            continue;
        }
        let (range, az) = project_to_slant_plane(s.position, radar)?;
        let (row, col) = grid.pixel_of(range, az);
        if !grid.contains_pixel(row, col) {
            continue;
        }
        let b = bounds.get_or_insert((col, row, col, row));
        *b = (b.0.min(col), b.1.min(row), b.2.max(col), b.3.max(row));
    }
    let (c0, r0, c1, r1) = bounds.ok_or(Error::NoVisibleTarget)?;
    let (cc, rc) = ((c0 + c1) / 2.0, (r0 + r1) / 2.0);
    let wpx = (c1 - c0).max(filter.min_size_px);
    let hpx = (r1 - r0).max(filter.min_size_px);
    Ok(BoundingBox::from_corners(
        (cc - wpx / 2.0) / n_a as f64,
        (rc - hpx / 2.0) / n_r as f64,
        (cc + wpx / 2.0) / n_a as f64,
        (rc + hpx / 2.0) / n_r as f64,
    ))
}

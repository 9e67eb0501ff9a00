use serde::{Deserialize, Serialize};

use super::cfar::{cfar_clusters, CfarConfig, Cluster};
use crate::comm::{ArrayGeometry, CodebookPair};
use crate::deteval::iou;
use crate::error::{Error, Result};
use crate::geometry::{Direction, Pose, Vec3};
use crate::radarsim::{PixelGrid, RadarImage};
use crate::scene::{BoundingBox, VehicleClass};
use crate::N_CLASSES;

/// Detector output: box, confidence, class scores and beam logits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub bbox: BoundingBox,
    pub confidence: f64,
    pub class_scores: [f64; N_CLASSES],
    pub logits_h: Vec<f64>,
    pub logits_v: Vec<f64>,
}

impl Detection {
    /// Highest-scoring class, lowest index on ties.
    pub fn best_class(&self) -> (usize, f64) {
        let mut best = (0, self.class_scores[0]);
        for (i, &s) in self.class_scores.iter().enumerate().skip(1) {
            if s > best.1 {
                best = (i, s);
            }
        }
        best
    }
}

/// Geometric beam head: logits are `κ · ln` of each beam's power gain
/// towards the direction of the box centre, seen from the base station.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamGeometry {
    pub bs_pose: Pose,
    pub bs_array: ArrayGeometry,
    pub sharpness: f64,
}

pub const DEFAULT_SHARPNESS: f64 = 10.0;
const GAIN_FLOOR: f64 = 1e-12;

/// Beam logits for a box. The box centre gives slant range and azimuth; the
/// ground point under it, raised to `target_height`, is the presumed antenna
/// location.
pub fn infer_beam_logits(
    bbox: &BoundingBox,
    grid: &PixelGrid,
    geom: &BeamGeometry,
    codebooks: &CodebookPair,
    target_height: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (row, col) = bbox.center_pixel(grid);
    if !grid.contains_pixel(row, col) {
        return Err(Error::DegenerateGeometry(format!("box centre ({row:.1}, {col:.1}) outside the grid")));
    }
    let (range, az) = grid.polar_at(row, col);
    let ground = grid
        .point_at(range, az)
        .ok_or_else(|| Error::DegenerateGeometry(format!("range {range:.2} m does not reach the surface")))?;
    let target = Vec3::new(ground.x, ground.y, target_height);
    Ok(beam_logits_towards(target, geom, codebooks))
}

pub fn beam_logits_towards(target: Vec3, geom: &BeamGeometry, codebooks: &CodebookPair) -> (Vec<f64>, Vec<f64>) {
    let dir = Direction::towards(&geom.bs_pose, target);
    let (u, v) = geom.bs_array.cosines(dir);
    let d = geom.bs_array.spacing;
    let to_logits = |gains: Vec<f64>| -> Vec<f64> {
        gains.into_iter().map(|g| geom.sharpness * (g * g).max(GAIN_FLOOR).ln()).collect()
    };
    (to_logits(codebooks.h.gains(d, u)), to_logits(codebooks.v.gains(d, v)))
}

/// Recomputes the beam logits of `det` for another base-station array, using
/// the roof height of its best class.
pub fn assign_beam_logits(det: &mut Detection, grid: &PixelGrid, geom: &BeamGeometry, codebooks: &CodebookPair) -> Result<()> {
    let class = VehicleClass::from_index(det.best_class().0).unwrap_or(VehicleClass::Sedan);
    let (h, v) = infer_beam_logits(&det.bbox, grid, geom, codebooks, class.extent().2)?;
    det.logits_h = h;
    det.logits_v = v;
    Ok(())
}

/// Greedy non-maximum suppression. Ties in confidence are broken by the
/// smaller box `x`.
pub fn nms(dets: &[Detection], iou_thr: f64) -> Vec<Detection> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| {
        dets[b]
            .confidence
            .partial_cmp(&dets[a].confidence)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(dets[a].bbox.x.partial_cmp(&dets[b].bbox.x).unwrap_or(std::cmp::Ordering::Equal))
            .then(a.cmp(&b))
    });
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        if kept.iter().all(|&k| iou(&dets[k].bbox, &dets[i].bbox) <= iou_thr) {
            kept.push(i);
        }
    }
    kept.into_iter().map(|i| dets[i].clone()).collect()
}

pub const DEFAULT_GAMMA_CLASS: f64 = 0.25;

/// Categorical class decision; beam logits pass through untouched.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassDecision<'a> {
    pub class: Option<VehicleClass>,
    pub logits_h: &'a [f64],
    pub logits_v: &'a [f64],
}

pub fn threshold_classes(det: &Detection, gamma_class: f64) -> ClassDecision<'_> {
    let (i, s) = det.best_class();
    ClassDecision {
        class: if s >= gamma_class { VehicleClass::from_index(i) } else { None },
        logits_h: &det.logits_h,
        logits_v: &det.logits_v,
    }
}

/// Settings of the reference detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    pub cfar: CfarConfig,
    /// Clusters with pixels closer than this on the ground plane (metres)
    /// form one target.
    pub merge_distance_m: f64,
    pub nms_iou: f64,
    pub sharpness: f64,
    /// Spread of the class size match, m.
    pub class_sigma_m: f64,
    /// Pixels trimmed from each box side to undo the imaging mainlobe.
    pub trim_px: f64,
    /// Targets smaller than this (metres, footprint diagonal) are dropped.
    pub min_extent_m: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            cfar: CfarConfig {
                guard: 4,
                train: 6,
                pfa: 1e-4,
                floor_db: Some(40.0),
                split_db: None,
                merge_gap_px: 0,
                grow_db: Some(10.0),
                min_size_px: 2.0,
            },
            merge_distance_m: 1.2,
            nms_iou: 0.5,
            sharpness: DEFAULT_SHARPNESS,
            class_sigma_m: 1.5,
            trim_px: 0.0,
            min_extent_m: 0.0,
        }
    }
}

/// CFAR → metric clustering → box, class scores and geometric beam logits.
#[derive(Debug, Clone)]
pub struct ReferenceDetector {
    pub config: DetectorConfig,
}

/// Ground-plane positions of a cluster's pixels and their bounding box.
struct Footprint {
    points: Vec<(f64, f64)>,
    lo: (f64, f64),
    hi: (f64, f64),
}

impl Footprint {
    fn new(c: &Cluster, grid: &PixelGrid) -> Self {
        let points: Vec<(f64, f64)> = c
            .pixels
            .iter()
            .filter_map(|&(r, col)| grid.world_point(r, col).map(|p| (p.x, p.y)))
            .collect();
        let mut lo = (f64::INFINITY, f64::INFINITY);
        let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &(x, y) in &points {
            lo = (lo.0.min(x), lo.1.min(y));
            hi = (hi.0.max(x), hi.1.max(y));
        }
        Self { points, lo, hi }
    }

    /// Whether some pair of pixels lies within `d` metres.
    fn within(&self, other: &Footprint, d: f64) -> bool {
        let gap = |lo1: f64, hi1: f64, lo2: f64, hi2: f64| (lo2 - hi1).max(lo1 - hi2).max(0.0);
        if gap(self.lo.0, self.hi.0, other.lo.0, other.hi.0).hypot(gap(self.lo.1, self.hi.1, other.lo.1, other.hi.1)) > d {
            return false;
        }
        let d2 = d * d;
        self.points
            .iter()
            .any(|a| other.points.iter().any(|b| (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2) <= d2))
    }

    /// Length and width along the principal axes of the pixel cloud, each
    /// reduced by `blur` metres for the imaging mainlobe.
    fn dimensions(&self, blur: f64) -> (f64, f64) {
        let n = self.points.len() as f64;
        if n == 0.0 {
            return (0.0, 0.0);
        }
        let (mx, my) = self.points.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0 / n, a.1 + p.1 / n));
        let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
        for &(x, y) in &self.points {
            sxx += (x - mx) * (x - mx);
            syy += (y - my) * (y - my);
            sxy += (x - mx) * (y - my);
        }
        let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
        let (s, c) = theta.sin_cos();
        let span = |f: &dyn Fn(&(f64, f64)) -> f64| {
            let (lo, hi) = self.points.iter().map(f).fold((f64::INFINITY, f64::NEG_INFINITY), |a, v| (a.0.min(v), a.1.max(v)));
            (hi - lo - blur).max(0.0)
        };
        let major = span(&|p| (p.0 - mx) * c + (p.1 - my) * s);
        let minor = span(&|p| -(p.0 - mx) * s + (p.1 - my) * c);
        (major.max(minor), major.min(minor))
    }

    fn absorb(&mut self, other: Footprint) {
        self.lo = (self.lo.0.min(other.lo.0), self.lo.1.min(other.lo.1));
        self.hi = (self.hi.0.max(other.hi.0), self.hi.1.max(other.hi.1));
        self.points.extend(other.points);
    }
}

impl ReferenceDetector {
    pub fn new(config: DetectorConfig) -> Self {
        Self { config }
    }

    /// Clusters after metric merging: two clusters join when any of their
    /// pixels lie within the merge distance on the ground plane.
    pub fn targets(&self, image: &RadarImage) -> Vec<Cluster> {
        let mag = image.normalized_magnitude();
        let mut clusters = cfar_clusters(&mag, &self.config.cfar);
        let grid = &image.grid;
        let mut feet: Vec<Footprint> = clusters.iter().map(|c| Footprint::new(c, grid)).collect();
        let d = self.config.merge_distance_m;
        // Repeated to a fixpoint; the lower index always survives.
        loop {
            let mut merged = false;
            'outer: for i in 0..clusters.len() {
                for j in i + 1..clusters.len() {
                    if feet[i].within(&feet[j], d) {
                        let other = clusters.remove(j);
                        let other_feet = feet.remove(j);
                        let keep = &mut clusters[i];
                        if other.peak_power > keep.peak_power {
                            keep.peak = other.peak;
                            keep.peak_power = other.peak_power;
                            keep.peak_threshold = other.peak_threshold;
                        }
                        keep.pixels.extend(other.pixels);
                        feet[i].absorb(other_feet);
                        merged = true;
                        break 'outer;
                    }
                }
            }
            if !merged {
                break;
            }
        }
        clusters
    }

    /// Class scores from a measured (length, width) in metres: Gaussian
    /// match against each class footprint, normalized to sum 1.
    pub fn class_scores(&self, extent_m: (f64, f64)) -> [f64; N_CLASSES] {
        let mut s = [0.0; N_CLASSES];
        for class in VehicleClass::ALL {
            let (l, w, _) = class.extent();
            let z2 = ((extent_m.0 - l).powi(2) + (extent_m.1 - w).powi(2)) / self.config.class_sigma_m.powi(2);
            s[class.index()] = (-0.5 * z2).exp();
        }
        let total: f64 = s.iter().sum();
        if total > 0.0 {
            s.iter_mut().for_each(|v| *v /= total);
        } else {
            s = [1.0 / N_CLASSES as f64; N_CLASSES];
        }
        s
    }

    pub fn detect(&self, image: &RadarImage, geom: &BeamGeometry, codebooks: &CodebookPair) -> Vec<Detection> {
        let grid = &image.grid;
        let shape = grid.shape();
        let mut dets = Vec::new();
        for c in self.targets(image) {
            let (r0, c0, r1, c1) = c.extent();
            let range = grid.ranges.value(c.peak.0 as f64);
            let blur = 0.5 * (grid.ranges.step + grid.angles.step * range);
            let size = Footprint::new(&c, grid).dimensions(blur);
            if size.0.hypot(size.1) < self.config.min_extent_m {
                continue;
            }
            let t = self.config.trim_px;
            let trim = |lo: usize, hi: usize| -> (f64, f64) {
                let (lo, hi) = (lo as f64, hi as f64);
                if hi - lo > 2.0 * t {
                    (lo + t, hi - t)
                } else {
                    let m = 0.5 * (lo + hi);
                    (m, m)
                }
            };
            let (fr0, fr1) = trim(r0, r1);
            let (fc0, fc1) = trim(c0, c1);
            let bbox = {
                let min = self.config.cfar.min_size_px;
                let (h, w) = (shape.0 as f64, shape.1 as f64);
                let (rc, cc) = (0.5 * (fr0 + fr1), 0.5 * (fc0 + fc1));
                let hp = (fr1 - fr0).max(min);
                let wp = (fc1 - fc0).max(min);
                BoundingBox::from_corners((cc - wp / 2.0) / w, (rc - hp / 2.0) / h, (cc + wp / 2.0) / w, (rc + hp / 2.0) / h)
            };
            let class_scores = self.class_scores(size);
            let best = VehicleClass::from_index(argmax(&class_scores)).unwrap_or(VehicleClass::Sedan);
            let height = best.extent().2;
            let Ok((logits_h, logits_v)) = infer_beam_logits(&bbox, grid, geom, codebooks, height) else {
                continue;
            };
            dets.push(Detection { bbox, confidence: c.confidence(), class_scores, logits_h, logits_v });
        }
        nms(&dets, self.config.nms_iou)
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i] > v[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radarsim::Axis;

    fn det(x0: f64, x1: f64, conf: f64) -> Detection {
        Detection {
            bbox: BoundingBox::from_corners(x0, 0.0, x1, 1.0),
            confidence: conf,
            class_scores: [1.0, 0.0, 0.0],
            logits_h: vec![],
            logits_v: vec![],
        }
    }

    #[test]
    fn nms_duplicates_and_disjoint() {
        let kept = nms(&[det(0.1, 0.2, 0.8), det(0.1, 0.2, 0.9)], 0.5);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].confidence, 0.9);
        assert_eq!(nms(&[det(0.0, 0.1, 0.3), det(0.5, 0.6, 0.2)], 0.5).len(), 2);
    }

    #[test]
    fn nms_chain() {
        // A–B and B–C overlap above the threshold, A–C below it.
        let a = det(0.0, 0.1, 0.9);
        let b = det(0.03, 0.13, 0.5);
        let c = det(0.06, 0.16, 0.7);
        assert!(iou(&a.bbox, &b.bbox) > 0.5 && iou(&b.bbox, &c.bbox) > 0.5 && iou(&a.bbox, &c.bbox) < 0.5);
        let kept = nms(&[a.clone(), b, c.clone()], 0.5);
        assert_eq!(kept, vec![a, c]);
    }

    #[test]
    fn class_thresholds() {
        let mut d = det(0.0, 0.1, 1.0);
        d.class_scores = [0.7, 0.2, 0.1];
        assert_eq!(threshold_classes(&d, 0.5).class, Some(VehicleClass::Sedan));
        d.class_scores = [0.3, 0.3, 0.4];
        assert_eq!(threshold_classes(&d, 0.5).class, None);
        d.class_scores = [0.3, 0.3, 0.3];
        assert_eq!(threshold_classes(&d, 0.0).class, Some(VehicleClass::Sedan));
    }

    #[test]
    fn boresight_logits() {
        let sensor = Pose::new(Vec3::new(0.0, 0.0, 5.0), 0.0);
        let grid = PixelGrid::new(Axis::spanning(10.0, 50.0, 81), Axis::spanning(-0.5, 0.5, 81), sensor, 0.0).unwrap();
        let geom = BeamGeometry { bs_pose: sensor, bs_array: ArrayGeometry::square(8), sharpness: 10.0 };
        let cb = CodebookPair::dft(8, 8);
        // Centre column is azimuth 0; at height 5 m the elevation is 0 too.
        let b = BoundingBox::new(40.0 / 81.0, 40.0 / 81.0, 0.05, 0.05);
        let (h, v) = infer_beam_logits(&b, &grid, &geom, &cb, 5.0).unwrap();
        assert_eq!(argmax(&h), 4);
        assert_eq!(argmax(&v), 4);
        let wide = BoundingBox::new(b.x, b.y, 0.3, 0.2);
        assert_eq!(infer_beam_logits(&wide, &grid, &geom, &cb, 5.0).unwrap(), (h, v));
    }
}

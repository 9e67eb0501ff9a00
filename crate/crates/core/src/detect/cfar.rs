use std::collections::VecDeque;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::scene::BoundingBox;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CfarConfig {
    /// Guard cells on each side, per axis.
    pub guard: usize,
    /// Training cells beyond the guard band, per axis.
    pub train: usize,
    pub pfa: f64,
    /// Ignore exceedances more than this many dB below the frame peak.
    pub floor_db: Option<f64>,
    /// Split a connected exceedance region at saddles at least this many dB
    /// below the lower of the two peaks.
    pub split_db: Option<f64>,
    /// Merge clusters whose boxes are at most this many pixels apart.
    pub merge_gap_px: usize,
    /// Hysteresis: clusters grow through connected cells within this many dB
    /// below their CFAR threshold.
    pub grow_db: Option<f64>,
    /// Minimum box side in pixels.
    pub min_size_px: f64,
}

impl Default for CfarConfig {
    fn default() -> Self {
        Self { guard: 2, train: 4, pfa: 1e-4, floor_db: None, split_db: None, merge_gap_px: 0, grow_db: None, min_size_px: 2.0 }
    }
}

impl CfarConfig {
    pub fn validate(&self) -> bool {
        self.train >= 1 && self.pfa > 0.0 && self.pfa < 1.0
    }
}

/// Connected group of CFAR exceedances.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub pixels: Vec<(usize, usize)>,
    pub peak: (usize, usize),
    pub peak_power: f64,
    /// CFAR threshold at the peak cell.
    pub peak_threshold: f64,
}

impl Cluster {
    /// `(row_min, col_min, row_max, col_max)`.
    pub fn extent(&self) -> (usize, usize, usize, usize) {
        self.pixels.iter().fold((usize::MAX, usize::MAX, 0, 0), |(r0, c0, r1, c1), &(r, c)| {
            (r0.min(r), c0.min(c), r1.max(r), c1.max(c))
        })
    }

    /// `1 − threshold / peak`, in `[0, 1]`.
    pub fn confidence(&self) -> f64 {
        if self.peak_power <= 0.0 {
            return 0.0;
        }
        (1.0 - self.peak_threshold / self.peak_power).clamp(0.0, 1.0)
    }

    pub fn bbox(&self, shape: (usize, usize), min_size_px: f64) -> BoundingBox {
        pixel_box(self.extent(), shape, min_size_px)
    }

    fn absorb(&mut self, other: Cluster) {
        if other.peak_power > self.peak_power {
            self.peak = other.peak;
            self.peak_power = other.peak_power;
            self.peak_threshold = other.peak_threshold;
        }
        self.pixels.extend(other.pixels);
    }
}

/// Normalized box around pixel extents, centred on pixel centres, sides at
/// least `min_size_px`.
pub fn pixel_box(extent: (usize, usize, usize, usize), shape: (usize, usize), min_size_px: f64) -> BoundingBox {
    let (r0, c0, r1, c1) = extent;
    let (h, w) = (shape.0 as f64, shape.1 as f64);
    let (rc, cc) = ((r0 + r1) as f64 / 2.0, (c0 + c1) as f64 / 2.0);
    let hp = ((r1 - r0) as f64).max(min_size_px);
    let wp = ((c1 - c0) as f64).max(min_size_px);
    BoundingBox::from_corners((cc - wp / 2.0) / w, (rc - hp / 2.0) / h, (cc + wp / 2.0) / w, (rc + hp / 2.0) / h)
}

fn integral(p: &Array2<f64>) -> Array2<f64> {
    let (h, w) = p.dim();
    let mut s = Array2::zeros((h + 1, w + 1));
    for r in 0..h {
        let mut row = 0.0;
        for c in 0..w {
            row += p[[r, c]];
            s[[r + 1, c + 1]] = s[[r, c + 1]] + row;
        }
    }
    s
}

fn window(s: &Array2<f64>, r: usize, c: usize, half: usize, dim: (usize, usize)) -> (f64, usize) {
    let r0 = r.saturating_sub(half);
    let c0 = c.saturating_sub(half);
    let r1 = (r + half + 1).min(dim.0);
    let c1 = (c + half + 1).min(dim.1);
    let sum = s[[r1, c1]] - s[[r0, c1]] - s[[r1, c0]] + s[[r0, c0]];
    (sum, (r1 - r0) * (c1 - c0))
}

/// Cell-averaging CFAR thresholds on a power image.
///
/// The training ring is truncated at the borders and the scale factor
/// `α = N (pfa^{−1/N} − 1)` uses each cell's actual training count `N`, which
/// keeps the false-alarm rate exact for exponentially distributed noise.
pub fn cfar_threshold(power: &Array2<f64>, cfg: &CfarConfig) -> Array2<f64> {
    let dim = power.dim();
    let s = integral(power);
    let outer = cfg.guard + cfg.train;
    Array2::from_shape_fn(dim, |(r, c)| {
        let (so, no) = window(&s, r, c, outer, dim);
        let (si, ni) = window(&s, r, c, cfg.guard, dim);
        let n = no - ni;
        if n == 0 {
            return f64::INFINITY;
        }
        let sum = (so - si).max(0.0);
        (cfg.pfa.powf(-1.0 / n as f64) - 1.0) * sum
    })
}

/// Cells exceeding their CFAR threshold (and the optional floor).
pub fn cfar_mask(power: &Array2<f64>, cfg: &CfarConfig) -> Array2<bool> {
    let thr = cfar_threshold(power, cfg);
    let floor = floor_level(power, cfg);
    Array2::from_shape_fn(power.dim(), |ix| power[ix] > thr[ix] && power[ix] >= floor && power[ix] > 0.0)
}

fn floor_level(power: &Array2<f64>, cfg: &CfarConfig) -> f64 {
    match cfg.floor_db {
        Some(db) => power.iter().cloned().fold(0.0, f64::max) * 10f64.powf(-db / 10.0),
        None => 0.0,
    }
}

const NEIGHBOURS: [(isize, isize); 8] = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)];

fn neighbours(r: usize, c: usize, dim: (usize, usize)) -> impl Iterator<Item = (usize, usize)> {
    NEIGHBOURS.iter().filter_map(move |&(dr, dc)| {
        let rr = r as isize + dr;
        let cc = c as isize + dc;
        (rr >= 0 && cc >= 0 && (rr as usize) < dim.0 && (cc as usize) < dim.1).then_some((rr as usize, cc as usize))
    })
}

/// CFAR on a normalized magnitude image followed by 8-connected clustering.
/// Detection runs on the squared magnitude. With `grow_db`, each cluster
/// extends from its exceedances into connected cells above the lowered
/// threshold.
pub fn cfar_clusters(magnitude: &Array2<f64>, cfg: &CfarConfig) -> Vec<Cluster> {
    let power = magnitude.mapv(|m| m * m);
    let thr = cfar_threshold(&power, cfg);
    let floor = floor_level(&power, cfg);
    let dim = power.dim();
    let mask = Array2::from_shape_fn(dim, |ix| power[ix] > thr[ix] && power[ix] >= floor && power[ix] > 0.0);
    let weak = match cfg.grow_db {
        Some(db) => {
            let f = 10f64.powf(-db / 10.0);
            Array2::from_shape_fn(dim, |ix| power[ix] > f * thr[ix] && power[ix] >= floor && power[ix] > 0.0)
        }
        None => mask.clone(),
    };

    let mut label = Array2::<usize>::from_elem(dim, usize::MAX);
    let mut clusters = Vec::new();
    for r in 0..dim.0 {
        for c in 0..dim.1 {
            if !mask[[r, c]] || label[[r, c]] != usize::MAX {
                continue;
            }
            let id = clusters.len();
            let mut pixels = Vec::new();
            let mut queue = VecDeque::from([(r, c)]);
            label[[r, c]] = id;
            while let Some((pr, pc)) = queue.pop_front() {
                pixels.push((pr, pc));
                for (nr, nc) in neighbours(pr, pc, dim) {
                    if weak[[nr, nc]] && label[[nr, nc]] == usize::MAX {
                        label[[nr, nc]] = id;
                        queue.push_back((nr, nc));
                    }
                }
            }
            pixels.sort_unstable();
            let comps = match cfg.split_db {
                Some(db) => split_component(&pixels, &power, db),
                None => vec![pixels],
            };
            for px in comps {
                let &peak = px
                    .iter()
                    .max_by(|a, b| power[**a].partial_cmp(&power[**b]).unwrap().then(b.cmp(a)))
                    .expect("nonempty component");
                clusters.push(Cluster { peak, peak_power: power[peak], peak_threshold: thr[peak], pixels: px });
            }
        }
    }
    if cfg.merge_gap_px > 0 {
        clusters = merge_close(clusters, cfg.merge_gap_px);
    }
    clusters
}

/// Watershed flooding from the brightest pixel down; two basins meeting at a
/// saddle stay separate only when the saddle lies at least `split_db` below
/// the lower of their peaks.
fn split_component(pixels: &[(usize, usize)], power: &Array2<f64>, split_db: f64) -> Vec<Vec<(usize, usize)>> {
    let ratio = 10f64.powf(split_db / 10.0);
    let mut order: Vec<(usize, usize)> = pixels.to_vec();
    order.sort_by(|a, b| power[*b].partial_cmp(&power[*a]).unwrap().then(a.cmp(b)));
    let dim = power.dim();
    let mut basin: std::collections::HashMap<(usize, usize), usize> = Default::default();
    let mut parent: Vec<usize> = Vec::new();
    let mut peak: Vec<f64> = Vec::new();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &p in &order {
        let mut roots: Vec<usize> = neighbours(p.0, p.1, dim)
            .filter_map(|n| basin.get(&n).copied())
            .map(|b| find(&mut parent, b))
            .collect();
        roots.sort_unstable();
        roots.dedup();
        if roots.is_empty() {
            let id = parent.len();
            parent.push(id);
            peak.push(power[p]);
            basin.insert(p, id);
            continue;
        }
        // Highest basin takes the pixel; shallow saddles merge basins.
        roots.sort_by(|a, b| peak[*b].partial_cmp(&peak[*a]).unwrap().then(a.cmp(b)));
        let top = roots[0];
        for &other in &roots[1..] {
            let lower = peak[other].min(peak[top]);
            if lower < ratio * power[p] {
                parent[other] = top;
            }
        }
        basin.insert(p, top);
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<(usize, usize)>> = Default::default();
    for &p in pixels {
        let root = find(&mut parent, basin[&p]);
        groups.entry(root).or_default().push(p);
    }
    groups.into_values().collect()
}

fn box_gap(a: (usize, usize, usize, usize), b: (usize, usize, usize, usize)) -> usize {
    let gap = |lo1: usize, hi1: usize, lo2: usize, hi2: usize| {
        if hi1 < lo2 {
            lo2 - hi1
        } else if hi2 < lo1 {
            lo1 - hi2
        } else {
            0
        }
    };
    gap(a.0, a.2, b.0, b.2).max(gap(a.1, a.3, b.1, b.3))
}

fn merge_close(mut clusters: Vec<Cluster>, gap: usize) -> Vec<Cluster> {
    loop {
        let mut merged = false;
        'outer: for i in 0..clusters.len() {
            for j in i + 1..clusters.len() {
                if box_gap(clusters[i].extent(), clusters[j].extent()) <= gap {
                    let other = clusters.remove(j);
                    clusters[i].absorb(other);
                    merged = true;
                    break 'outer;
                }
            }
        }
        if !merged {
            return clusters;
        }
    }
}

/// Boxes and confidences of the CFAR clusters of a normalized magnitude
/// image.
pub fn cfar_detect_and_cluster(magnitude: &Array2<f64>, cfg: &CfarConfig) -> Vec<(BoundingBox, f64)> {
    cfar_clusters(magnitude, cfg)
        .into_iter()
        .map(|c| (c.bbox(magnitude.dim(), cfg.min_size_px), c.confidence()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_image() {
        assert!(cfar_detect_and_cluster(&Array2::zeros((16, 16)), &CfarConfig::default()).is_empty());
    }

    #[test]
    fn border_threshold_uses_actual_count() {
        let p = Array2::from_elem((10, 10), 1.0);
        let cfg = CfarConfig { guard: 1, train: 1, ..Default::default() };
        let t = cfar_threshold(&p, &cfg);
        // Interior ring holds 16 cells, a corner ring 5.
        assert!((t[[5, 5]] - 16.0 * (1e-4f64.powf(-1.0 / 16.0) - 1.0)).abs() < 1e-9);
        assert!((t[[0, 0]] - 5.0 * (1e-4f64.powf(-1.0 / 5.0) - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn saddle_split() {
        // Two peaks with a 10 dB dip between them.
        let mut m = Array2::zeros((1, 9));
        for (c, v) in [(1, 0.5), (2, 1.0), (3, 0.5), (4, 0.3), (5, 0.5), (6, 0.9), (7, 0.5)] {
            m[[0, c]] = v;
        }
        let power = m.mapv(|v: f64| v * v);
        let px: Vec<(usize, usize)> = (1..8).map(|c| (0, c)).collect();
        assert_eq!(split_component(&px, &power, 6.0).len(), 2);
        assert_eq!(split_component(&px, &power, 12.0).len(), 1);
    }

    #[test]
    fn gap_merge() {
        let mk = |c: usize| Cluster { pixels: vec![(0, c)], peak: (0, c), peak_power: 1.0, peak_threshold: 0.1 };
        assert_eq!(merge_close(vec![mk(0), mk(3), mk(10)], 3).len(), 2);
    }
}

use std::f64::consts::TAU;

use ndarray::{Array2, Axis as NdAxis};
use num_complex::Complex64;
use ndarray::parallel::prelude::*;

use super::array::RadarArray;
use super::compress::RangeProfile;
use super::grid::PixelGrid;
use super::waveform::RadarWaveform;
use crate::error::{Error, Result};
use crate::SPEED_OF_LIGHT;

/// Complex back-projected image `[N_r × N_a]` for PRI `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarImage {
    pub pixels: Array2<Complex64>,
    pub grid: PixelGrid,
    pub k: u64,
}

impl RadarImage {
    pub fn magnitude(&self) -> Array2<f64> {
        self.pixels.mapv(|v| v.norm())
    }

    /// `|I| / max |I|`, all zeros for an all-zero image.
    pub fn normalized_magnitude(&self) -> Array2<f64> {
        let mag = self.magnitude();
        let max = mag.iter().cloned().fold(0.0, f64::max);
        if max > 0.0 {
            mag / max
        } else {
            mag
        }
    }

    pub fn peak(&self) -> (usize, usize, f64) {
        let mut best = (0, 0, -1.0);
        for ((r, c), v) in self.pixels.indexed_iter() {
            let m = v.norm();
            if m > best.2 {
                best = (r, c, m);
            }
        }
        best
    }
}

/// Back-projection of range-compressed data onto `grid`.
///
/// Each pixel sums, over channels in fixed order, the profile interpolated at
/// the pixel's two-way delay and re-phased by `e^{+j2πf0τ}`. Delays outside
/// the profile support contribute zero. Rows are processed in parallel; the
/// per-pixel reduction order never changes, so the image is independent of
/// the worker count.
pub fn backproject(
    profiles: &RangeProfile,
    array: &RadarArray,
    waveform: &RadarWaveform,
    grid: &PixelGrid,
    k: u64,
) -> Result<RadarImage> {
    backproject_weighted(profiles, array, waveform, grid, k, None)
}

/// As [`backproject`], with per-channel amplitude weights (for instance
/// [`super::Window::planar_weights`]).
pub fn backproject_weighted(
    profiles: &RangeProfile,
    array: &RadarArray,
    waveform: &RadarWaveform,
    grid: &PixelGrid,
    k: u64,
    weights: Option<&[f64]>,
) -> Result<RadarImage> {
    if let Some(w) = weights {
        if w.len() != array.n_channels() {
            return Err(Error::DimensionMismatch(format!("{} weights for {} channels", w.len(), array.n_channels())));
        }
    }
    if profiles.n_channels() != array.n_channels() {
        return Err(Error::DimensionMismatch(format!(
            "{} profiles for {} channels",
            profiles.n_channels(),
            array.n_channels()
        )));
    }
    grid.validate()?;
    // Bin-major, so one pixel reads neighbouring memory across channels.
    let mut demod = profiles.demodulated();
    if let Some(w) = weights {
        for (mut row, &wl) in demod.axis_iter_mut(NdAxis(0)).zip(w) {
            row.mapv_inplace(|v| v * wl);
        }
    }
    let demod = demod.reversed_axes().as_standard_layout().into_owned();
    let demod = demod.as_slice().expect("standard layout");
    let n_ch = profiles.n_channels();
    let n_bins = profiles.n_bins();
    let last = (n_bins - 1) as f64;
    let inv_step = 1.0 / profiles.delay_step;
    let f0 = waveform.f0_hz;
    let ramp_cycles = profiles.ramp_rate / TAU;
    let (n_r, n_a) = grid.shape();

    let mut pixels = Array2::<Complex64>::zeros((n_r, n_a));
    pixels
        .axis_iter_mut(NdAxis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(row, mut out)| {
            for (col, px) in out.iter_mut().enumerate() {
                let Some(x) = grid.world_point(row, col) else {
                    continue;
                };
                let mut acc = Complex64::new(0.0, 0.0);
                let mut l = 0;
                for tx in &array.tx_positions {
                    let d_tx = x.distance(*tx);
                    for rx in &array.rx_positions {
                        let tau = (d_tx + rx.distance(x)) / SPEED_OF_LIGHT;
                        let pos = tau * inv_step;
                        if pos < last {
                            let i = pos as usize;
                            let w = pos - i as f64;
                            let base = i * n_ch + l;
                            let d = demod[base] * (1.0 - w) + demod[base + n_ch] * w;
                            // Integer carrier cycles are dropped before adding the ramp.
                            acc += d * cis_cycles((f0 * tau).fract() + ramp_cycles * tau);
                        }
                        l += 1;
                    }
                }
                *px = acc;
            }
        });

    Ok(RadarImage { pixels, grid: *grid, k })
}

/// `e^{j2πc}`, range-reduced to an eighth of a turn and evaluated with
/// Taylor polynomials (truncation error below 1e-13).
#[inline]
fn cis_cycles(c: f64) -> Complex64 {
    let q = (4.0 * c).round();
    let t = TAU * (c - 0.25 * q);
    let t2 = t * t;
    let sin = t * (1.0
        + t2 * (-1.0 / 6.0
            + t2 * (1.0 / 120.0
                + t2 * (-1.0 / 5040.0
                    + t2 * (1.0 / 362_880.0 + t2 * (-1.0 / 39_916_800.0 + t2 * (1.0 / 6_227_020_800.0)))))));
    let cos = 1.0
        + t2 * (-0.5
            + t2 * (1.0 / 24.0
                + t2 * (-1.0 / 720.0
                    + t2 * (1.0 / 40_320.0
                        + t2 * (-1.0 / 3_628_800.0 + t2 * (1.0 / 479_001_600.0 + t2 * (-1.0 / 87_178_291_200.0)))))));
    match (q as i64).rem_euclid(4) {
        0 => Complex64::new(cos, sin),
        1 => Complex64::new(-sin, cos),
        2 => Complex64::new(-cos, -sin),
        _ => Complex64::new(sin, -cos),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Pose, Vec3};
    use crate::radarsim::compress::range_compress;
    use crate::radarsim::grid::Axis;
    use crate::radarsim::synth::{synthesize_rx, PointTarget};

    fn setup(n_az: usize) -> (RadarArray, RadarWaveform, PixelGrid) {
        let w = RadarWaveform::default();
        let pose = Pose::new(Vec3::new(0.0, 0.0, 5.0), 0.0);
        let array = RadarArray::planar(pose, n_az, 1, w.wavelength() / 2.0);
        let grid = PixelGrid::new(Axis::spanning(18.0, 22.0, 41), Axis::spanning(-0.2, 0.2, 41), pose, 1.0).unwrap();
        (array, w, grid)
    }

    fn image(targets: &[PointTarget], array: &RadarArray, w: &RadarWaveform, grid: &PixelGrid) -> RadarImage {
        let f = synthesize_rx(targets, w, array, 0, 40e6, 0.0, 0).unwrap();
        let p = range_compress(&f, w).unwrap();
        backproject(&p, array, w, grid, 0).unwrap()
    }

    #[test]
    fn phasor_matches_std() {
        let mut worst: f64 = 0.0;
        for i in 0..200_001 {
            let c = -3.0 + 6.0 * i as f64 / 200_000.0;
            let want = Complex64::from_polar(1.0, TAU * c);
            worst = worst.max((cis_cycles(c) - want).norm());
        }
        assert!(worst < 1e-13, "{worst}");
    }

    #[test]
    fn zero_profiles_zero_image() {
        let (array, w, grid) = setup(8);
        let img = image(&[], &array, &w, &grid);
        assert!(img.pixels.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn linearity_in_scatterers() {
        let (array, w, grid) = setup(16);
        let a = PointTarget { position: grid.world_point(10, 12).unwrap(), rcs: 1.0, phase: 0.3, doppler_hz: 0.0 };
        let b = PointTarget { position: grid.world_point(30, 25).unwrap(), rcs: 2.0, phase: 1.9, doppler_hz: 0.0 };
        let ia = image(&[a], &array, &w, &grid);
        let ib = image(&[b], &array, &w, &grid);
        let iab = image(&[a, b], &array, &w, &grid);
        let scale = iab.peak().2;
        for ((x, y), z) in ia.pixels.iter().zip(ib.pixels.iter()).zip(iab.pixels.iter()) {
            assert!((x + y - z).norm() <= 1e-9 * scale);
        }
    }

    #[test]
    fn mismatched_channel_count() {
        let (array, w, grid) = setup(8);
        let (small, _, _) = setup(4);
        let f = synthesize_rx(&[], &w, &small, 0, 40e6, 0.0, 0).unwrap();
        let p = range_compress(&f, &w).unwrap();
        assert!(matches!(backproject(&p, &array, &w, &grid, 0), Err(Error::DimensionMismatch(_))));
    }
}

use std::f64::consts::{PI, TAU};

use ndarray::{Array2, Axis as NdAxis};
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use ndarray::parallel::prelude::*;
use serde::{Deserialize, Serialize};

use super::array::{RadarArray, VirtualChannel};
use super::waveform::RadarWaveform;
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::rng;
use crate::SPEED_OF_LIGHT;

/// Below this distance two points are treated as coincident.
const MIN_DISTANCE: f64 = 1e-9;

/// A point scatterer in world coordinates, ready for echo synthesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointTarget {
    pub position: Vec3,
    /// Radar cross section Γ in m².
    pub rcs: f64,
    /// Swerling-0 phase δ in `[0, 2π)`.
    pub phase: f64,
    /// Doppler shift `2 V / λ0` in Hz, `V` the radial velocity.
    pub doppler_hz: f64,
}

impl PointTarget {
    pub fn new(position: Vec3, rcs: f64) -> Self {
        Self { position, rcs, phase: 0.0, doppler_hz: 0.0 }
    }
}

/// Dechirped fast-time samples of one PRI, `[L channels × N_t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarFrame {
    pub k: u64,
    pub samples: Array2<Complex64>,
    pub fs: f64,
    pub noise_sigma2: f64,
}

impl RadarFrame {
    pub fn n_channels(&self) -> usize {
        self.samples.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.samples.ncols()
    }
}

/// Two-way propagation delay Tx → `p` → Rx.
pub fn two_way_delay(p: Vec3, tx: Vec3, rx: Vec3) -> Result<f64> {
    let d_tx = p.distance(tx);
    let d_rx = rx.distance(p);
    if d_tx < MIN_DISTANCE || d_rx < MIN_DISTANCE {
        return Err(Error::DegenerateGeometry(format!("scatterer at {p:?} coincides with an antenna")));
    }
    Ok((d_tx + d_rx) / SPEED_OF_LIGHT)
}

/// Complex scattering amplitude β of `target` on one channel at PRI `k`.
pub fn scattering_amplitude(
    target: &PointTarget,
    channel: &VirtualChannel,
    array: &RadarArray,
    waveform: &RadarWaveform,
    k: u64,
) -> Result<Complex64> {
    let d_tx = target.position.distance(channel.tx);
    let d_rx = channel.rx.distance(target.position);
    if d_tx < MIN_DISTANCE || d_rx < MIN_DISTANCE {
        return Err(Error::DegenerateGeometry(format!(
            "scatterer at {:?} coincides with an antenna",
            target.position
        )));
    }
    let lambda = waveform.wavelength();
    let g_tx = array.gain_towards(channel.tx, target.position);
    let g_rx = array.gain_towards(channel.rx, target.position);
    let power = (4.0 * PI).powi(-3) * lambda * lambda * g_tx * g_rx * target.rcs / (d_tx * d_tx * d_rx * d_rx);
    let phase = target.phase + TAU * target.doppler_hz * k as f64 * waveform.pri_s;
    Ok(Complex64::from_polar(power.sqrt(), phase))
}

/// `exp(-j 2π f0 τ)` evaluated with the integer cycles removed first.
pub(crate) fn carrier_phase(f0: f64, tau: f64) -> f64 {
    TAU * (f0 * tau).fract()
}

/// Synthesizes the dechirped echo of `targets` on every virtual channel.
///
/// Noise is circular complex Gaussian with variance `noise_sigma2`, drawn from
/// a per-channel stream derived from `rng_seed`, so the frame does not depend
/// on how channels are scheduled.
pub fn synthesize_rx(
    targets: &[PointTarget],
    waveform: &RadarWaveform,
    array: &RadarArray,
    k: u64,
    fs: f64,
    noise_sigma2: f64,
    rng_seed: u64,
) -> Result<RadarFrame> {
    waveform.validate()?;
    if !(fs > 0.0) || !(noise_sigma2 >= 0.0) {
        return Err(Error::InvalidConfig("sample rate must be positive and noise variance nonnegative".into()));
    }
    let n_t = waveform.samples_per_chirp(fs);
    let n_ch = array.n_channels();
    let mu = waveform.chirp_rate();
    let f0 = waveform.f0_hz;
    let limit = waveform.max_unambiguous_delay(fs);

    // Per (channel, target) start value and per-sample rotation of the beat tone.
    let mut tones = Vec::with_capacity(n_ch * targets.len());
    for channel in array.channels() {
        for target in targets {
            let tau = two_way_delay(target.position, channel.tx, channel.rx)?;
            if tau >= limit {
                return Err(Error::RangeAmbiguity { delay_s: tau, limit_s: limit });
            }
            let beta = scattering_amplitude(target, &channel, array, waveform, k)?;
            let start = beta * Complex64::from_polar(1.0, -(carrier_phase(f0, tau) - PI * mu * tau * tau));
            let step = Complex64::from_polar(1.0, -TAU * mu * tau / fs);
            tones.push((start, step));
        }
    }

    let mut samples = Array2::<Complex64>::zeros((n_ch, n_t));
    let n_q = targets.len();
    samples
        .axis_iter_mut(NdAxis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(l, mut row)| {
            for &(start, step) in &tones[l * n_q..(l + 1) * n_q] {
                let mut phasor = start;
                for s in row.iter_mut() {
                    *s += phasor;
                    phasor *= step;
                }
            }
            if noise_sigma2 > 0.0 {
                let mut rng = rng::stream(rng_seed, &[rng::purpose::RADAR_NOISE, k, l as u64]);
                let sd = (noise_sigma2 / 2.0).sqrt();
                for s in row.iter_mut() {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    *s += Complex64::new(sd * re, sd * im);
                }
            }
        });

    Ok(RadarFrame { k, samples, fs, noise_sigma2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose;

    fn mono() -> (RadarArray, VirtualChannel) {
        let array = RadarArray::planar(Pose::default(), 1, 1, 0.0);
        let ch = array.channel(0);
        (array, ch)
    }

    #[test]
    fn monostatic_delay() {
        let tau = two_way_delay(Vec3::new(150.0, 0.0, 0.0), Vec3::ZERO, Vec3::ZERO).unwrap();
        assert!((tau - 300.0 / SPEED_OF_LIGHT).abs() < 1e-20);
        assert!((tau - 1.0007e-6).abs() < 1e-10);
    }

    #[test]
    fn equidistant_delay() {
        let tx = Vec3::new(-3.0, 0.0, 0.0);
        let rx = Vec3::new(3.0, 0.0, 0.0);
        let p = Vec3::new(0.0, 91f64.sqrt(), 0.0);
        let tau = two_way_delay(p, tx, rx).unwrap();
        assert!((tau - 20.0 / SPEED_OF_LIGHT).abs() < 1e-20);
    }

    #[test]
    fn bistatic_delay_by_hand() {
        // |(30,4,5)| = sqrt(941), |(29.9,4,5)| = sqrt(935.01)
        let tau = two_way_delay(Vec3::new(30.0, 4.0, 5.0), Vec3::ZERO, Vec3::new(0.1, 0.0, 0.0)).unwrap();
        let expected = (941f64.sqrt() + 935.01f64.sqrt()) / SPEED_OF_LIGHT;
        assert!((tau - expected).abs() < 1e-21);
    }

    #[test]
    fn coincident_delay_is_error() {
        assert!(matches!(
            two_way_delay(Vec3::ZERO, Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0)),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn amplitude_plug_in() {
        let (array, ch) = mono();
        let w = RadarWaveform::default();
        let r = 25.0;
        let t = PointTarget::new(Vec3::new(r, 0.0, 0.0), 2.0);
        let beta = scattering_amplitude(&t, &ch, &array, &w, 0).unwrap();
        let expected = w.wavelength() * 2f64.sqrt() / ((4.0 * PI).powf(1.5) * r * r);
        assert!((beta.norm() - expected).abs() < 1e-15 * expected.max(1.0));
        assert!(beta.arg().abs() < 1e-15);

        let zero = PointTarget::new(Vec3::new(r, 0.0, 0.0), 0.0);
        assert_eq!(scattering_amplitude(&zero, &ch, &array, &w, 0).unwrap().norm(), 0.0);

        let far = PointTarget::new(Vec3::new(2.0 * r, 0.0, 0.0), 2.0);
        let ratio = scattering_amplitude(&far, &ch, &array, &w, 0).unwrap().norm() / beta.norm();
        assert!((ratio - 0.25).abs() < 1e-12);
    }

    #[test]
    fn doppler_phase_advances_with_pri() {
        let (array, ch) = mono();
        let w = RadarWaveform::default();
        let mut t = PointTarget::new(Vec3::new(20.0, 0.0, 0.0), 1.0);
        t.doppler_hz = 1000.0;
        let b0 = scattering_amplitude(&t, &ch, &array, &w, 0).unwrap();
        let b3 = scattering_amplitude(&t, &ch, &array, &w, 3).unwrap();
        let expected = TAU * 1000.0 * 3.0 * w.pri_s;
        assert!(((b3 / b0).arg() - expected).abs() < 1e-9);
    }

    #[test]
    fn empty_scene_is_silent() {
        let (array, _) = mono();
        let f = synthesize_rx(&[], &RadarWaveform::default(), &array, 0, 40e6, 0.0, 1).unwrap();
        assert!(f.samples.iter().all(|s| *s == Complex64::new(0.0, 0.0)));
        assert_eq!(f.n_samples(), 800);
    }

    #[test]
    fn beyond_unambiguous_range() {
        let (array, _) = mono();
        let t = PointTarget::new(Vec3::new(90.0, 0.0, 0.0), 1.0);
        let r = synthesize_rx(&[t], &RadarWaveform::default(), &array, 0, 40e6, 0.0, 1);
        assert!(matches!(r, Err(Error::RangeAmbiguity { .. })));
    }

    #[test]
    fn single_target_tone_peaks_at_beat_bin() {
        let (array, _) = mono();
        let w = RadarWaveform::default();
        let fs = 40e6;
        let t = PointTarget::new(Vec3::new(31.3, 0.0, 0.0), 1.0);
        let f = synthesize_rx(&[t], &w, &array, 0, fs, 0.0, 1).unwrap();
        let row = f.samples.row(0);
        let m0 = row[0].norm();
        assert!(row.iter().all(|s| (s.norm() - m0).abs() < 1e-9 * m0));

        // Brute-force DFT with the e^{+j} kernel; the beat tone sits at μτ.
        let n = row.len();
        let tau = 2.0 * 31.3 / SPEED_OF_LIGHT;
        let expected = (w.chirp_rate() * tau * n as f64 / fs).round() as usize;
        let peak = (0..n)
            .map(|m| {
                let acc: Complex64 = row
                    .iter()
                    .enumerate()
                    .map(|(i, s)| s * Complex64::from_polar(1.0, TAU * (m * i) as f64 / n as f64))
                    .sum();
                (m, acc.norm())
            })
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap()
            .0;
        assert_eq!(peak, expected);
    }

    #[test]
    fn superposition_is_exact() {
        let array = RadarArray::planar(Pose::default(), 4, 1, 0.005);
        let w = RadarWaveform::default();
        let a = PointTarget { position: Vec3::new(20.0, 3.0, -1.0), rcs: 1.0, phase: 0.4, doppler_hz: 0.0 };
        let b = PointTarget { position: Vec3::new(35.0, -6.0, 0.0), rcs: 3.0, phase: 2.0, doppler_hz: 0.0 };
        let fa = synthesize_rx(&[a], &w, &array, 0, 40e6, 0.0, 1).unwrap();
        let fb = synthesize_rx(&[b], &w, &array, 0, 40e6, 0.0, 1).unwrap();
        let fab = synthesize_rx(&[a, b], &w, &array, 0, 40e6, 0.0, 1).unwrap();
        assert_eq!(fab.samples, &fa.samples + &fb.samples);
    }

    #[test]
    fn noise_statistics_and_reproducibility() {
        let array = RadarArray::planar(Pose::default(), 8, 1, 0.005);
        let w = RadarWaveform::default();
        let f1 = synthesize_rx(&[], &w, &array, 2, 40e6, 0.5, 99).unwrap();
        let f2 = synthesize_rx(&[], &w, &array, 2, 40e6, 0.5, 99).unwrap();
        assert_eq!(f1.samples, f2.samples);
        let power = f1.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / f1.samples.len() as f64;
        assert!((power - 0.5).abs() < 0.03, "{power}");
    }
}

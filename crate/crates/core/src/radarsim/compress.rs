use std::f64::consts::PI;

use ndarray::{Array2, Axis as NdAxis};
use num_complex::Complex64;
use ndarray::parallel::prelude::*;
use rustfft::FftPlanner;

use super::synth::RadarFrame;
use super::waveform::RadarWaveform;
use super::window::Window;
use crate::error::{Error, Result};

/// Default zero-padding factor applied before the range FFT.
pub const DEFAULT_OVERSAMPLE: usize = 8;

/// Range-compressed data `[L × N_t·oversample]` on a uniform delay axis
/// starting at zero.
///
/// A noiseless point target at delay τ shows up as `α β e^{-j2πf0τ}` times a
/// Dirichlet kernel centred on τ. That kernel carries a known linear phase
/// ramp (`ramp_rate`, rad/s of delay) which [`RangeProfile::sample_at`]
/// removes before interpolating, so off-grid samples keep the exact carrier
/// phase.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeProfile {
    pub samples: Array2<Complex64>,
    pub delay_step: f64,
    pub oversample: usize,
    pub ramp_rate: f64,
}

impl RangeProfile {
    pub fn n_channels(&self) -> usize {
        self.samples.nrows()
    }

    pub fn n_bins(&self) -> usize {
        self.samples.ncols()
    }

    pub fn delay_of_bin(&self, m: usize) -> f64 {
        m as f64 * self.delay_step
    }

    /// Largest delay that can be interpolated.
    pub fn max_delay(&self) -> f64 {
        (self.n_bins() as f64 - 1.0) * self.delay_step
    }

    /// Profile with the kernel phase ramp removed, the form interpolated by
    /// back-projection.
    pub fn demodulated(&self) -> Array2<Complex64> {
        let mut out = self.samples.clone();
        for mut row in out.axis_iter_mut(NdAxis(0)) {
            for (m, v) in row.iter_mut().enumerate() {
                *v *= Complex64::from_polar(1.0, -self.ramp_rate * self.delay_of_bin(m));
            }
        }
        out
    }

    /// Interpolated value at an arbitrary delay; zero outside the support.
    pub fn sample_at(&self, channel: usize, delay: f64) -> Complex64 {
        let pos = delay / self.delay_step;
        if !(pos >= 0.0) || pos >= (self.n_bins() - 1) as f64 {
            return Complex64::new(0.0, 0.0);
        }
        let i = pos.floor() as usize;
        let w = pos - i as f64;
        let row = self.samples.row(channel);
        let demod = |m: usize| row[m] * Complex64::from_polar(1.0, -self.ramp_rate * self.delay_of_bin(m));
        let d = demod(i) * (1.0 - w) + demod(i + 1) * w;
        d * Complex64::from_polar(1.0, self.ramp_rate * delay)
    }
}

/// Range compression with the default 8× zero padding.
pub fn range_compress(frame: &RadarFrame, waveform: &RadarWaveform) -> Result<RangeProfile> {
    range_compress_with(frame, waveform, DEFAULT_OVERSAMPLE)
}

/// Fourier transform over fast time, mapping of beat frequency to delay
/// (`t = f / μ`) and removal of the residual video phase.
///
/// The output is scaled by `α / N_t`, `α = Tc·Bs·A`, so a noiseless target
/// with amplitude β peaks at `α |β|`.
pub fn range_compress_with(frame: &RadarFrame, waveform: &RadarWaveform, oversample: usize) -> Result<RangeProfile> {
    range_compress_windowed(frame, waveform, oversample, Window::Rectangular)
}

/// As [`range_compress_with`], with a fast-time taper. The taper has unit
/// mean, so the peak height is kept up to the window's mainlobe loss.
pub fn range_compress_windowed(
    frame: &RadarFrame,
    waveform: &RadarWaveform,
    oversample: usize,
    window: Window,
) -> Result<RangeProfile> {
    let n_t = frame.n_samples();
    if oversample == 0 {
        return Err(Error::InvalidConfig("oversample must be at least 1".into()));
    }
    if n_t != waveform.samples_per_chirp(frame.fs) {
        return Err(Error::DimensionMismatch(format!(
            "frame has {n_t} samples, waveform at fs={} expects {}",
            frame.fs,
            waveform.samples_per_chirp(frame.fs)
        )));
    }
    let n_fft = n_t * oversample;
    let mu = waveform.chirp_rate();
    let delay_step = frame.fs / (mu * n_fft as f64);
    let scale = waveform.compression_gain() / n_t as f64;
    let fft = FftPlanner::<f64>::new().plan_fft_inverse(n_fft);
    let taper = window.weights(n_t);

    let video: Vec<Complex64> = (0..n_fft)
        .map(|m| {
            let t = m as f64 * delay_step;
            Complex64::from_polar(scale, -PI * mu * t * t)
        })
        .collect();

    let mut samples = Array2::<Complex64>::zeros((frame.n_channels(), n_fft));
    samples
        .axis_iter_mut(NdAxis(0))
        .into_par_iter()
        .zip(frame.samples.axis_iter(NdAxis(0)).into_par_iter())
        .for_each(|(mut out, input)| {
            let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
            for ((b, s), w) in buf.iter_mut().zip(input.iter()).zip(&taper) {
                *b = *s * *w;
            }
            fft.process(&mut buf);
            for ((o, b), v) in out.iter_mut().zip(buf).zip(&video) {
                *o = b * v;
            }
        });

    let ramp_rate = PI * (n_t as f64 - 1.0) * mu / frame.fs;
    Ok(RangeProfile { samples, delay_step, oversample, ramp_rate })
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::SPEED_OF_LIGHT;

/// How the chirp rate relates to the swept bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChirpConvention {
    /// `μ = Bs / Tc`: the instantaneous frequency really spans `[f0, f0 + Bs]`.
    #[default]
    FullSweep,
    /// `μ = Bs / (2 Tc)`: only half the bandwidth is swept.
    HalfSweep,
}

/// Linear FMCW chirp parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadarWaveform {
    pub f0_hz: f64,
    pub bandwidth_hz: f64,
    pub chirp_s: f64,
    pub pri_s: f64,
    pub amplitude: f64,
    pub convention: ChirpConvention,
}

impl Default for RadarWaveform {
    fn default() -> Self {
        Self {
            f0_hz: 28e9,
            bandwidth_hz: 800e6,
            chirp_s: 20e-6,
            pri_s: 25e-6,
            amplitude: 1.0,
            convention: ChirpConvention::FullSweep,
        }
    }
}

impl RadarWaveform {
    pub fn validate(&self) -> Result<()> {
        let ok = self.chirp_s > 0.0
            && self.chirp_s <= self.pri_s
            && self.bandwidth_hz > 0.0
            && self.f0_hz > self.bandwidth_hz
            && self.amplitude.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid waveform {self:?}")))
        }
    }

    pub fn chirp_rate(&self) -> f64 {
        match self.convention {
            ChirpConvention::FullSweep => self.bandwidth_hz / self.chirp_s,
            ChirpConvention::HalfSweep => self.bandwidth_hz / (2.0 * self.chirp_s),
        }
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.f0_hz
    }

    /// Range-compression gain `Tc · Bs · A`.
    pub fn compression_gain(&self) -> f64 {
        self.chirp_s * self.bandwidth_hz * self.amplitude
    }

    /// Bandwidth actually swept during one chirp (`μ · Tc`).
    pub fn swept_bandwidth(&self) -> f64 {
        self.chirp_rate() * self.chirp_s
    }

    /// Slant-range resolution `c / (2 μ Tc)`.
    pub fn range_resolution(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.swept_bandwidth())
    }

    /// Number of fast-time samples per chirp at sample rate `fs`.
    pub fn samples_per_chirp(&self, fs: f64) -> usize {
        (self.chirp_s * fs).round() as usize
    }

    /// Largest delay that is sampled without beat-frequency aliasing.
    pub fn max_unambiguous_delay(&self, fs: f64) -> f64 {
        (fs / (2.0 * self.chirp_rate())).min(self.chirp_s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conventions_differ_by_two() {
        let full = RadarWaveform::default();
        let half = RadarWaveform { convention: ChirpConvention::HalfSweep, ..full };
        assert!((full.chirp_rate() / half.chirp_rate() - 2.0).abs() < 1e-12);
        assert!((full.range_resolution() - 0.187_370_286_25).abs() < 1e-9);
    }

    #[test]
    fn rejects_chirp_longer_than_pri() {
        let w = RadarWaveform { chirp_s: 30e-6, ..Default::default() };
        assert!(w.validate().is_err());
    }
}

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

/// Amplitude taper for sidelobe control.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    #[default]
    Rectangular,
    Hann,
    Hamming,
}

impl Window {
    /// `n` symmetric weights scaled to unit mean, so a coherent sum keeps its
    /// on-peak gain.
    pub fn weights(self, n: usize) -> Vec<f64> {
        if n <= 1 {
            return vec![1.0; n];
        }
        let raw: Vec<f64> = (0..n)
            .map(|i| {
                let c = (TAU * i as f64 / (n - 1) as f64).cos();
                match self {
                    Window::Rectangular => 1.0,
                    Window::Hann => 0.5 - 0.5 * c,
                    Window::Hamming => 0.54 - 0.46 * c,
                }
            })
            .collect();
        let mean = raw.iter().sum::<f64>() / n as f64;
        raw.into_iter().map(|w| w / mean).collect()
    }

    /// Weights of a planar array built by [`super::RadarArray::planar`]
    /// (azimuth-major channel order), tapered along both axes.
    pub fn planar_weights(self, n_az: usize, n_el: usize) -> Vec<f64> {
        let wa = self.weights(n_az);
        let we = self.weights(n_el);
        wa.iter().flat_map(|a| we.iter().map(move |e| a * e)).collect()
    }
}

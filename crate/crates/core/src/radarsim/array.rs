use serde::{Deserialize, Serialize};

use crate::geometry::{Pose, Vec3};

/// Power pattern of a single radar element.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ElementGain {
    #[default]
    Isotropic,
    /// `max(cos θ, 0)^exponent` with θ the angle off the array boresight.
    Cosine { exponent: f64 },
}

/// One virtual (Tx, Rx) measurement channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VirtualChannel {
    pub tx: Vec3,
    pub rx: Vec3,
}

/// MIMO radar antenna positions in world coordinates.
///
/// Virtual channels are enumerated tx-major: channel `ℓ = t · L_rx + r`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarArray {
    pub tx_positions: Vec<Vec3>,
    pub rx_positions: Vec<Vec3>,
    pub element_gain: ElementGain,
    pub pose: Pose,
}

impl RadarArray {
    /// Single Tx at the array centre and an `n_az × n_el` planar Rx grid in the
    /// local y–z plane with spacing `spacing` metres.
    pub fn planar(pose: Pose, n_az: usize, n_el: usize, spacing: f64) -> Self {
        let half_az = (n_az as f64 - 1.0) / 2.0;
        let half_el = (n_el as f64 - 1.0) / 2.0;
        let mut rx = Vec::with_capacity(n_az * n_el);
        for m in 0..n_az {
            for n in 0..n_el {
                let local = Vec3::new(0.0, (m as f64 - half_az) * spacing, (n as f64 - half_el) * spacing);
                rx.push(pose.to_world(local));
            }
        }
        Self {
            tx_positions: vec![pose.position],
            rx_positions: rx,
            element_gain: ElementGain::Isotropic,
            pose,
        }
    }

    pub fn n_channels(&self) -> usize {
        self.tx_positions.len() * self.rx_positions.len()
    }

    pub fn channel(&self, l: usize) -> VirtualChannel {
        let n_rx = self.rx_positions.len();
        VirtualChannel {
            tx: self.tx_positions[l / n_rx],
            rx: self.rx_positions[l % n_rx],
        }
    }

    pub fn channels(&self) -> impl Iterator<Item = VirtualChannel> + '_ {
        (0..self.n_channels()).map(|l| self.channel(l))
    }

    /// Element power gain towards world point `p` as seen from `from`.
    pub fn gain_towards(&self, from: Vec3, p: Vec3) -> f64 {
        match self.element_gain {
            ElementGain::Isotropic => 1.0,
            ElementGain::Cosine { exponent } => {
                let d = p - from;
                let n = d.norm();
                if n == 0.0 {
                    return 0.0;
                }
                let boresight = Vec3::new(self.pose.yaw.cos(), self.pose.yaw.sin(), 0.0);
                (d.dot(boresight) / n).max(0.0).powf(exponent)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tx_major_enumeration() {
        let mut a = RadarArray::planar(Pose::default(), 3, 1, 0.5);
        a.tx_positions.push(Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(a.n_channels(), 6);
        assert_eq!(a.channel(4).tx, Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(a.channel(4).rx, a.rx_positions[1]);
    }

    #[test]
    fn planar_layout_is_centred() {
        let a = RadarArray::planar(Pose::new(Vec3::new(0.0, 0.0, 5.0), 0.0), 4, 2, 0.1);
        let mean_y: f64 = a.rx_positions.iter().map(|p| p.y).sum::<f64>() / 8.0;
        let mean_z: f64 = a.rx_positions.iter().map(|p| p.z).sum::<f64>() / 8.0;
        assert!(mean_y.abs() < 1e-12);
        assert!((mean_z - 5.0).abs() < 1e-12);
    }
}

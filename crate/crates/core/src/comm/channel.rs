use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::array::{steering_vector, ArrayGeometry};
use crate::geometry::{Direction, Pose, Vec3};
use crate::rng::SimRng;
use crate::SPEED_OF_LIGHT;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathParams {
    pub alpha: Complex64,
    pub doppler_nu: f64,
    /// Departure direction in the base-station frame.
    pub dod: Direction,
    /// Arrival direction in the vehicle frame.
    pub doa: Direction,
    pub sigma_p2: f64,
}

/// Paths to generate for each link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathModel {
    /// Adds a specular ground reflection (image method).
    pub ground_bounce: bool,
    /// Power share of the reflected path when present.
    pub bounce_share: f64,
    /// Rayleigh path amplitudes; when false every path has amplitude `σ_p`
    /// with zero phase.
    pub rayleigh: bool,
}

impl Default for PathModel {
    fn default() -> Self {
        Self { ground_bounce: true, bounce_share: 0.1, rayleigh: true }
    }
}

impl PathModel {
    pub fn los_only() -> Self {
        Self { ground_bounce: false, ..Self::default() }
    }
}

/// Narrowband MIMO channel snapshot between a base station (transmitter) and
/// a vehicle (receiver).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    pub paths: Vec<PathParams>,
    /// Average path loss, linear (≥ 1).
    pub rho: f64,
    pub bs: ArrayGeometry,
    pub ue: ArrayGeometry,
}

impl ChannelRealization {
    /// `H = sqrt(N_R N_T / ρ) Σ_p α_p a_UE(ϑ_p) a_BS(φ_p)^H` with unit-norm
    /// steering vectors, so that `E‖H‖² = N_R N_T / ρ`.
    pub fn matrix(&self) -> Array2<Complex64> {
        self.normalized_matrix() * Complex64::new(1.0 / self.rho.sqrt(), 0.0)
    }

    /// Channel with the path loss removed, `√ρ · H`.
    pub fn normalized_matrix(&self) -> Array2<Complex64> {
        let (n_r, n_t) = (self.ue.n(), self.bs.n());
        let scale = ((n_r * n_t) as f64).sqrt();
        let mut h = Array2::<Complex64>::zeros((n_r, n_t));
        for p in &self.paths {
            let a_ue = steering_vector(&self.ue, p.doa);
            let a_bs = steering_vector(&self.bs, p.dod);
            for r in 0..n_r {
                let left = a_ue[r] * p.alpha * scale;
                for t in 0..n_t {
                    h[[r, t]] += left * a_bs[t].conj();
                }
            }
        }
        h
    }
}

/// Free-space path loss `(4π d f0 / c)²`.
pub fn free_space_loss(distance: f64, f0_hz: f64) -> f64 {
    (4.0 * PI * distance * f0_hz / SPEED_OF_LIGHT).powi(2)
}

fn complex_normal(rng: &mut SimRng, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

/// Line-of-sight channel plus an optional ground reflection.
///
/// `ve` is the pose of the vehicle antenna (position and heading). Path
/// directions follow from the geometry; amplitudes are drawn from `rng`.
pub fn generate_channel(
    bs: &Pose,
    bs_array: ArrayGeometry,
    ve: &Pose,
    ue_array: ArrayGeometry,
    ve_velocity: Vec3,
    model: &PathModel,
    f0_hz: f64,
    rng: &mut SimRng,
) -> ChannelRealization {
    let wavelength = SPEED_OF_LIGHT / f0_hz;
    let mirror = |p: Vec3| Vec3::new(p.x, p.y, -p.z);
    let mut geometry = vec![(ve.position, bs.position, 1.0)];
    if model.ground_bounce {
        let share = model.bounce_share.clamp(0.0, 1.0);
        geometry[0].2 = 1.0 - share;
        geometry.push((mirror(ve.position), mirror(bs.position), share));
    }
    let paths = geometry
        .into_iter()
        .map(|(ve_seen_from_bs, bs_seen_from_ve, sigma_p2)| {
            let doa = Direction::towards(ve, bs_seen_from_ve);
            let towards_bs = bs_seen_from_ve - ve.position;
            let doppler_nu = ve_velocity.dot(towards_bs) / towards_bs.norm() / wavelength;
            let alpha = if model.rayleigh {
                complex_normal(rng, sigma_p2)
            } else {
                Complex64::new(sigma_p2.sqrt(), 0.0)
            };
            PathParams { alpha, doppler_nu, dod: Direction::towards(bs, ve_seen_from_bs), doa, sigma_p2 }
        })
        .collect();
    ChannelRealization {
        paths,
        rho: free_space_loss(bs.position.distance(ve.position), f0_hz),
        bs: bs_array,
        ue: ue_array,
    }
}

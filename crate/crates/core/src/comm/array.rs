use std::f64::consts::TAU;

use ndarray::Array1;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Direction;

/// Orientation of a planar array relative to its pose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrayMount {
    /// Elements in the local y–z plane, broadside along +x (base station).
    #[default]
    Facade,
    /// Elements in the local x–y plane, broadside straight up (vehicle roof).
    Roof,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub n_h: usize,
    pub n_v: usize,
    /// Element spacing in wavelengths.
    #[serde(default = "half")]
    pub spacing: f64,
    #[serde(default)]
    pub mount: ArrayMount,
}

fn half() -> f64 {
    0.5
}

impl ArrayGeometry {
    pub fn new(n_h: usize, n_v: usize) -> Self {
        Self { n_h, n_v, spacing: 0.5, mount: ArrayMount::Facade }
    }

    pub fn square(n: usize) -> Self {
        Self::new(n, n)
    }

    pub fn roof(n_h: usize, n_v: usize) -> Self {
        Self { mount: ArrayMount::Roof, ..Self::new(n_h, n_v) }
    }

    pub fn n(&self) -> usize {
        self.n_h * self.n_v
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_h == 0 || self.n_v == 0 || !(self.spacing > 0.0) {
            return Err(Error::InvalidConfig(format!("invalid array {}x{} spacing {}", self.n_h, self.n_v, self.spacing)));
        }
        Ok(())
    }

    /// Direction cosines `(u, v)` of `dir` along the horizontal and vertical
    /// element axes.
    pub fn cosines(&self, dir: Direction) -> (f64, f64) {
        let (sa, ca) = dir.az.sin_cos();
        let (se, ce) = dir.el.sin_cos();
        match self.mount {
            ArrayMount::Facade => (ce * sa, se),
            ArrayMount::Roof => (ce * ca, ce * sa),
        }
    }
}

/// Unit-norm response of an `n`-element uniform line with spacing `d`
/// wavelengths to direction cosine `u`.
pub fn axis_response(n: usize, d: f64, u: f64) -> Array1<Complex64> {
    let scale = 1.0 / (n as f64).sqrt();
    Array1::from_iter((0..n).map(|m| Complex64::from_polar(scale, TAU * d * m as f64 * u)))
}

/// `a = a_h ⊗ a_v`, unit norm, horizontal index major.
pub fn steering_vector(geom: &ArrayGeometry, dir: Direction) -> Array1<Complex64> {
    let (u, v) = geom.cosines(dir);
    kron(&axis_response(geom.n_h, geom.spacing, u), &axis_response(geom.n_v, geom.spacing, v))
}

pub fn kron(a: &Array1<Complex64>, b: &Array1<Complex64>) -> Array1<Complex64> {
    Array1::from_iter(a.iter().flat_map(|x| b.iter().map(move |y| x * y)))
}

/// `a^H b`.
pub fn inner(a: &Array1<Complex64>, b: &Array1<Complex64>) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn broadside_is_flat() {
        let g = ArrayGeometry::new(4, 2);
        let a = steering_vector(&g, Direction::BORESIGHT);
        for v in a.iter() {
            assert!((v - Complex64::new(1.0 / 8f64.sqrt(), 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn dirichlet_kernel() {
        let g = ArrayGeometry::new(8, 1);
        let a30 = steering_vector(&g, Direction::new(PI / 6.0, 0.0));
        let a0 = steering_vector(&g, Direction::BORESIGHT);
        assert!((inner(&a30, &a30).re - 1.0).abs() < 1e-12);
        // |Σ e^{jπ m u}| / N with u = sin 30° = 0.5.
        let psi = PI * 0.5;
        let expected = ((8.0 * psi / 2.0).sin() / (psi / 2.0).sin()).abs() / 8.0;
        assert!((inner(&a30, &a0).norm() - expected).abs() < 1e-12);
    }

    #[test]
    fn roof_cosines() {
        let g = ArrayGeometry::roof(2, 2);
        let (u, v) = g.cosines(Direction::new(0.0, PI / 2.0));
        assert!(u.abs() < 1e-15 && v.abs() < 1e-15);
        let (u, v) = g.cosines(Direction::new(PI / 2.0, 0.0));
        assert!(u.abs() < 1e-15 && (v - 1.0).abs() < 1e-15);
    }
}

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use ndarray::{Array1, Array2, ArrayView1};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::array::{axis_response, inner, kron};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodebookAxis {
    Horizontal,
    Vertical,
}

/// DFT beam set for one array axis. Beam `i` (row `i`) points at spatial
/// frequency `ψ_i = −1 + 2i/N`, so index `N/2` is broadside and indices grow
/// with the direction cosine.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub axis: CodebookAxis,
    pub beams: Array2<Complex64>,
}

impl Codebook {
    pub fn dft(axis: CodebookAxis, n: usize) -> Self {
        let scale = 1.0 / (n as f64).sqrt();
        let beams = Array2::from_shape_fn((n, n), |(i, m)| {
            let psi = Self::psi(n, i);
            Complex64::from_polar(scale, PI * m as f64 * psi)
        });
        Self { axis, beams }
    }

    fn psi(n: usize, i: usize) -> f64 {
        -1.0 + 2.0 * i as f64 / n as f64
    }

    pub fn len(&self) -> usize {
        self.beams.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn beam(&self, i: usize) -> ArrayView1<'_, Complex64> {
        self.beams.row(i)
    }

    /// Direction cosine the beam is designed for, for element spacing `d`
    /// wavelengths.
    pub fn design_cosine(&self, i: usize, d: f64) -> f64 {
        Self::psi(self.len(), i) / (2.0 * d)
    }

    /// `|f_i^H a(u)|` for every beam.
    pub fn gains(&self, d: f64, u: f64) -> Vec<f64> {
        self.responses(d, u).into_iter().map(|g| g.norm()).collect()
    }

    /// `a(u)^H f_i` for every beam.
    pub fn responses(&self, d: f64, u: f64) -> Vec<Complex64> {
        let a = axis_response(self.len(), d, u);
        (0..self.len()).map(|i| inner(&a, &self.beam(i).to_owned())).collect()
    }

    /// Writes the axis, size and every entry, one beam per line.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        let axis = match self.axis {
            CodebookAxis::Horizontal => "horizontal",
            CodebookAxis::Vertical => "vertical",
        };
        writeln!(out, "{axis} {}", self.len())?;
        for row in self.beams.rows() {
            let line: Vec<String> = row.iter().map(|c| format!("{} {}", c.re, c.im)).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let err = |line: usize, m: &str| Error::Parse { line, message: m.to_string() };
        let head = lines.next().ok_or_else(|| err(1, "missing header"))??;
        let mut parts = head.split_whitespace();
        let axis = match parts.next() {
            Some("horizontal") => CodebookAxis::Horizontal,
            Some("vertical") => CodebookAxis::Vertical,
            _ => return Err(err(1, "unknown axis")),
        };
        let n: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(|| err(1, "bad size"))?;
        let mut beams = Array2::zeros((n, n));
        for i in 0..n {
            let line = lines.next().ok_or_else(|| err(i + 2, "missing beam"))??;
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| err(i + 2, &e.to_string()))?;
            if vals.len() != 2 * n {
                return Err(err(i + 2, "wrong number of entries"));
            }
            for m in 0..n {
                beams[[i, m]] = Complex64::new(vals[2 * m], vals[2 * m + 1]);
            }
        }
        Ok(Self { axis, beams })
    }
}

/// Horizontal and vertical codebooks of one planar array.
#[derive(Debug, Clone, PartialEq)]
pub struct CodebookPair {
    pub h: Codebook,
    pub v: Codebook,
}

impl CodebookPair {
    pub fn dft(n_h: usize, n_v: usize) -> Self {
        Self { h: Codebook::dft(CodebookAxis::Horizontal, n_h), v: Codebook::dft(CodebookAxis::Vertical, n_v) }
    }

    /// Number of composed beams.
    pub fn len(&self) -> usize {
        self.h.len() * self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn composed(&self, i: usize, j: usize) -> Array1<Complex64> {
        kron(&self.h.beam(i).to_owned(), &self.v.beam(j).to_owned())
    }
}

/// `f = f_h ⊗ f_v`.
pub fn compose_beam(f_h: &Array1<Complex64>, f_v: &Array1<Complex64>) -> Result<Array1<Complex64>> {
    if f_h.is_empty() || f_v.is_empty() {
        return Err(Error::DimensionMismatch("empty beam vector".into()));
    }
    Ok(kron(f_h, f_v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unitary() {
        for n in [1, 2, 5, 16] {
            let cb = Codebook::dft(CodebookAxis::Horizontal, n);
            for i in 0..n {
                for k in 0..n {
                    let g = inner(&cb.beam(i).to_owned(), &cb.beam(k).to_owned());
                    let expect = if i == k { 1.0 } else { 0.0 };
                    assert!((g - Complex64::new(expect, 0.0)).norm() < 1e-12, "n={n} {i} {k}");
                }
                for v in cb.beam(i).iter() {
                    assert!((v.norm() - 1.0 / (n as f64).sqrt()).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn scalar_composition() {
        let one = Array1::from_vec(vec![Complex64::new(1.0, 0.0)]);
        assert_eq!(compose_beam(&one, &one).unwrap()[0], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn composition_order() {
        let a = Array1::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0)]);
        let b = Array1::from_vec(vec![Complex64::new(3.0, 0.0), Complex64::new(0.0, 1.0)]);
        let f = compose_beam(&a, &b).unwrap();
        let expect = [3.0, 0.0, 6.0, 0.0];
        let expect_im = [0.0, 1.0, 0.0, 2.0];
        for m in 0..4 {
            assert_eq!(f[m], Complex64::new(expect[m], expect_im[m]));
        }
    }

    #[test]
    fn own_direction_wins() {
        let cb = Codebook::dft(CodebookAxis::Vertical, 16);
        for i in 0..16 {
            let g = cb.gains(0.5, cb.design_cosine(i, 0.5));
            let best = g.iter().cloned().fold(0.0, f64::max);
            assert!((g[i] - best).abs() < 1e-12 && (g[i] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn text_round_trip() {
        let cb = Codebook::dft(CodebookAxis::Vertical, 6);
        let mut buf = Vec::new();
        cb.write_text(&mut buf).unwrap();
        assert_eq!(Codebook::read_text(buf.as_slice()).unwrap(), cb);
    }
}

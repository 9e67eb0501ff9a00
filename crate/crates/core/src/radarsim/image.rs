//! Range–angle image normalization and file export.

use std::io::{Read, Write};

use ndarray::Array2;
use num_complex::Complex64;

use super::backproject::RadarImage;
use super::grid::{Axis, PixelGrid};
use crate::error::{Error, Result};
use crate::geometry::{Pose, Vec3};

pub const DEFAULT_DYNAMIC_RANGE_DB: f64 = 60.0;

/// Magic bytes opening a binary image dump.
pub const DUMP_MAGIC: &[u8; 8] = b"ISACRAI1";

/// Log-magnitude image mapped onto `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeAngleImage {
    pub values: Array2<f64>,
    /// Set when the source image was identically zero.
    pub all_zero: bool,
}

/// `20 log10 |I|` relative to the frame maximum, clipped to `dynamic_range_db`
/// and mapped affinely so the maximum is 1 and the clip floor is 0.
pub fn to_range_angle_image(img: &RadarImage, dynamic_range_db: f64) -> Result<RangeAngleImage> {
    if img.pixels.is_empty() {
        return Err(Error::DimensionMismatch("empty image".into()));
    }
    if !(dynamic_range_db > 0.0) {
        return Err(Error::InvalidConfig("dynamic range must be positive".into()));
    }
    let mag = img.magnitude();
    let max = mag.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return Ok(RangeAngleImage { values: Array2::zeros(mag.raw_dim()), all_zero: true });
    }
    let values = mag.mapv(|m| {
        if m == 0.0 {
            return 0.0;
        }
        let db = (20.0 * (m / max).log10()).max(-dynamic_range_db);
        (db + dynamic_range_db) / dynamic_range_db
    });
    Ok(RangeAngleImage { values, all_zero: false })
}

/// Provenance stamped into exported files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Provenance {
    pub seed: u64,
    pub spec_hash: [u8; 32],
}

impl Provenance {
    pub fn hash_hex(&self) -> String {
        self.spec_hash.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Binary dump: magic, `u32` N_r, `u32` N_a, `f64` f0, `f64` Bs, `u64` seed,
/// 32-byte spec hash, `f64` frame index, radar pose (x, y, z, yaw) and
/// surface height, the range and angle axes as `f64` arrays, then row-major
/// `(f32 re, f32 im)` pairs. All little endian.
pub fn write_image_dump<W: Write>(
    mut out: W,
    img: &RadarImage,
    f0_hz: f64,
    bandwidth_hz: f64,
    provenance: Provenance,
) -> Result<()> {
    let (n_r, n_a) = img.grid.shape();
    out.write_all(DUMP_MAGIC)?;
    out.write_all(&(n_r as u32).to_le_bytes())?;
    out.write_all(&(n_a as u32).to_le_bytes())?;
    for v in [f0_hz, bandwidth_hz] {
        out.write_all(&v.to_le_bytes())?;
    }
    out.write_all(&provenance.seed.to_le_bytes())?;
    out.write_all(&provenance.spec_hash)?;
    let o = img.grid.origin;
    for v in [img.k as f64, o.position.x, o.position.y, o.position.z, o.yaw, img.grid.surface_height] {
        out.write_all(&v.to_le_bytes())?;
    }
    for v in img.grid.ranges.values().into_iter().chain(img.grid.angles.values()) {
        out.write_all(&v.to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(n_r * n_a * 8);
    for v in img.pixels.iter() {
        buf.extend_from_slice(&(v.re as f32).to_le_bytes());
        buf.extend_from_slice(&(v.im as f32).to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Decoded binary dump.
#[derive(Debug, Clone)]
pub struct ImageDump {
    pub image: RadarImage,
    pub f0_hz: f64,
    pub bandwidth_hz: f64,
    pub provenance: Provenance,
}

pub fn read_image_dump<R: Read>(mut input: R) -> Result<ImageDump> {
    let bad = |m: &str| Error::Parse { line: 0, message: m.to_string() };
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != DUMP_MAGIC {
        return Err(bad("not an image dump (bad magic)"));
    }
    let mut b4 = [0u8; 4];
    input.read_exact(&mut b4)?;
    let n_r = u32::from_le_bytes(b4) as usize;
    input.read_exact(&mut b4)?;
    let n_a = u32::from_le_bytes(b4) as usize;
    let f0_hz = read_f64(&mut input)?;
    let bandwidth_hz = read_f64(&mut input)?;
    let mut b8 = [0u8; 8];
    input.read_exact(&mut b8)?;
    let seed = u64::from_le_bytes(b8);
    let mut spec_hash = [0u8; 32];
    input.read_exact(&mut spec_hash)?;
    let k = read_f64(&mut input)? as u64;
    let (x, y, z, yaw) = (read_f64(&mut input)?, read_f64(&mut input)?, read_f64(&mut input)?, read_f64(&mut input)?);
    let surface_height = read_f64(&mut input)?;
    let ranges: Vec<f64> = (0..n_r).map(|_| read_f64(&mut input)).collect::<Result<_>>()?;
    let angles: Vec<f64> = (0..n_a).map(|_| read_f64(&mut input)).collect::<Result<_>>()?;
    let axis = |v: &[f64]| {
        let step = if v.len() > 1 { v[1] - v[0] } else { 1.0 };
        Axis::new(v[0], step, v.len())
    };
    if n_r == 0 || n_a == 0 {
        return Err(bad("empty image"));
    }
    let grid = PixelGrid::new(axis(&ranges), axis(&angles), Pose::new(Vec3::new(x, y, z), yaw), surface_height)?;
    let mut raw = vec![0u8; n_r * n_a * 8];
    input.read_exact(&mut raw)?;
    let pixels: Vec<Complex64> = raw
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            Complex64::new(re as f64, im as f64)
        })
        .collect();
    let pixels = Array2::from_shape_vec((n_r, n_a), pixels).map_err(|e| bad(&e.to_string()))?;
    Ok(ImageDump {
        image: RadarImage { pixels, grid, k },
        f0_hz,
        bandwidth_hz,
        provenance: Provenance { seed, spec_hash },
    })
}

/// 8-bit binary PGM of a `[0, 1]` image, first row at the top.
pub fn write_pgm<W: Write>(mut out: W, values: &Array2<f64>, provenance: Option<Provenance>) -> Result<()> {
    let (h, w) = values.dim();
    write!(out, "P5\n")?;
    if let Some(p) = provenance {
        write!(out, "# seed={} spec_hash={}\n", p.seed, p.hash_hex())?;
    }
    write!(out, "{w} {h}\n255\n")?;
    let bytes: Vec<u8> = values.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8).collect();
    out.write_all(&bytes)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose;

    fn grid(n_r: usize, n_a: usize) -> PixelGrid {
        PixelGrid::new(
            Axis::spanning(10.0, 20.0, n_r),
            Axis::spanning(-0.5, 0.5, n_a),
            Pose::new(Vec3::new(0.0, 0.0, 5.0), 0.0),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn constant_magnitude_maps_to_one() {
        let pixels = Array2::from_shape_fn((4, 5), |(r, c)| Complex64::from_polar(2.0, (r * 5 + c) as f64));
        let img = RadarImage { pixels, grid: grid(4, 5), k: 0 };
        let ra = to_range_angle_image(&img, 60.0).unwrap();
        assert!(ra.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn clip_boundary_maps_to_zero() {
        let mut pixels = Array2::from_elem((2, 2), Complex64::new(1.0, 0.0));
        pixels[[1, 1]] = Complex64::new(1e-3, 0.0);
        pixels[[0, 1]] = Complex64::new(1e-5, 0.0);
        let img = RadarImage { pixels, grid: grid(2, 2), k: 0 };
        let ra = to_range_angle_image(&img, 60.0).unwrap();
        assert!(ra.values[[1, 1]].abs() < 1e-12);
        assert_eq!(ra.values[[0, 1]], 0.0);
        assert_eq!(ra.values[[0, 0]], 1.0);
    }

    #[test]
    fn all_zero_is_flagged() {
        let img = RadarImage { pixels: Array2::zeros((3, 3)), grid: grid(3, 3), k: 0 };
        let ra = to_range_angle_image(&img, 60.0).unwrap();
        assert!(ra.all_zero);
        assert!(ra.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn dump_round_trip() {
        let pixels = Array2::from_shape_fn((3, 4), |(r, c)| Complex64::new(r as f64 + 0.5, -(c as f64)));
        let img = RadarImage { pixels, grid: grid(3, 4), k: 7 };
        let prov = Provenance { seed: 42, spec_hash: [7u8; 32] };
        let mut buf = Vec::new();
        write_image_dump(&mut buf, &img, 28e9, 8e8, prov).unwrap();
        let back = read_image_dump(buf.as_slice()).unwrap();
        assert_eq!(back.image.pixels, img.pixels);
        assert_eq!(back.image.k, 7);
        assert_eq!(back.provenance, prov);
        assert!((back.image.grid.ranges.step - img.grid.ranges.step).abs() < 1e-12);
    }

    #[test]
    fn pgm_header() {
        let mut buf = Vec::new();
        write_pgm(&mut buf, &Array2::from_elem((2, 3), 0.5), None).unwrap();
        assert!(buf.starts_with(b"P5\n3 2\n255\n"));
        assert_eq!(buf.len(), 11 + 6);
        assert_eq!(buf[11], 128);
    }
}

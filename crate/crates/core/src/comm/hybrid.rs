use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Sub-connected hybrid precoder layout: `n_rf` chains, each driving a
/// disjoint block of `n / n_rf` consecutive antennas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HybridConfig {
    pub n: usize,
    pub n_rf: usize,
}

impl HybridConfig {
    pub fn block(&self) -> usize {
        self.n / self.n_rf
    }

    pub fn is_valid(&self) -> bool {
        self.n_rf > 0 && self.n % self.n_rf == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum HybridViolation {
    ShapeMismatch(String),
    BlockDiagonalViolation { row: usize, col: usize },
    ModulusViolation { row: usize, col: usize, modulus: f64 },
    PowerConstraintViolation { power: f64, expected: f64 },
}

/// Checks the analog precoder `F_RF` (`N × N_RF`) and digital precoder
/// `F_BB` (`N_RF × N_S`) against the sub-connected structure, the
/// phase-shifter modulus `1/√N` and the total power `‖F_RF F_BB‖² = N_S`.
pub fn validate_hybrid(cfg: &HybridConfig, f_rf: &Array2<Complex64>, f_bb: &Array2<Complex64>) -> Vec<HybridViolation> {
    let mut out = Vec::new();
    if !cfg.is_valid() {
        out.push(HybridViolation::ShapeMismatch(format!("{} RF chains do not divide {} antennas", cfg.n_rf, cfg.n)));
        return out;
    }
    if f_rf.dim() != (cfg.n, cfg.n_rf) || f_bb.nrows() != cfg.n_rf {
        out.push(HybridViolation::ShapeMismatch(format!(
            "F_RF {:?} and F_BB {:?} for N={} N_RF={}",
            f_rf.dim(),
            f_bb.dim(),
            cfg.n,
            cfg.n_rf
        )));
        return out;
    }
    let block = cfg.block();
    let target = 1.0 / (cfg.n as f64).sqrt();
    for ((row, col), v) in f_rf.indexed_iter() {
        let on_block = row / block == col;
        if !on_block {
            if v.norm() > 1e-12 {
                out.push(HybridViolation::BlockDiagonalViolation { row, col });
            }
        } else if (v.norm() - target).abs() > 1e-9 {
            out.push(HybridViolation::ModulusViolation { row, col, modulus: v.norm() });
        }
    }
    let f = f_rf.dot(f_bb);
    let power: f64 = f.iter().map(|v| v.norm_sqr()).sum();
    let expected = f_bb.ncols() as f64;
    if (power - expected).abs() > 1e-9 * expected.max(1.0) {
        out.push(HybridViolation::PowerConstraintViolation { power, expected });
    }
    out
}

/// Analog precoder whose `n`-th block holds `beams[n]` rescaled to entry
/// modulus `1/√N`.
pub fn subarray_precoder(cfg: &HybridConfig, beams: &[Vec<Complex64>]) -> Array2<Complex64> {
    let block = cfg.block();
    let target = 1.0 / (cfg.n as f64).sqrt();
    let mut f = Array2::zeros((cfg.n, cfg.n_rf));
    for (c, beam) in beams.iter().enumerate().take(cfg.n_rf) {
        for (m, v) in beam.iter().enumerate().take(block) {
            f[[c * block + m, c]] = if v.norm() > 0.0 { v / v.norm() * target } else { Complex64::new(target, 0.0) };
        }
    }
    f
}

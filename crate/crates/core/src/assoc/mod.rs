//! Target-to-user association in the beamspace: softmax calibration of
//! detector beam logits, cross-entropy cost matrices, optimal assignment and
//! the probability of correct association.

mod hungarian;

pub use hungarian::{brute_force_min, min_cost_matching, solve_lexicographic, Assignment};

use serde::{Deserialize, Serialize};

use crate::comm::BeamReport;
use crate::detect::Detection;
use crate::deteval::iou;
use crate::error::{Error, Result};
use crate::scene::BoundingBox;

/// Probability floor applied before taking logarithms.
pub const PROB_FLOOR: f64 = 1e-12;

/// Max-shifted softmax.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// `ln softmax(z)_i`, floored at `ln 1e-12`.
pub fn log_softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    z.iter().map(|v| (v - lse).max(PROB_FLOOR.ln())).collect()
}

fn log_sigmoid(x: f64) -> f64 {
    // ln σ(x) = −ln(1 + e^{−x}), evaluated without overflow.
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// How detector logits are compared with a VE's selected beams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostKind {
    /// Categorical cross-entropy over each codebook's softmax.
    #[default]
    Cce,
    /// Per-beam binary cross-entropy over independent sigmoids.
    Bce,
}

fn check_one_hot(y: &[f64], logits: &[f64]) -> Result<()> {
    if y.len() != logits.len() {
        return Err(Error::SchemaMismatch(format!("one-hot length {} vs {} logits", y.len(), logits.len())));
    }
    Ok(())
}

/// `−Σ y^h ln σ(ŷ^h) − Σ y^v ln σ(ŷ^v)`.
pub fn cce_cost(y_h: &[f64], y_v: &[f64], logits_h: &[f64], logits_v: &[f64]) -> Result<f64> {
    check_one_hot(y_h, logits_h)?;
    check_one_hot(y_v, logits_v)?;
    let part = |y: &[f64], z: &[f64]| -> f64 {
        log_softmax(z).iter().zip(y).map(|(l, t)| -t * l).sum()
    };
    Ok(part(y_h, logits_h) + part(y_v, logits_v))
}

/// Binary cross-entropy of independent per-beam sigmoids against the one-hot
/// targets, summed over both codebooks.
pub fn bce_cost(y_h: &[f64], y_v: &[f64], logits_h: &[f64], logits_v: &[f64]) -> Result<f64> {
    check_one_hot(y_h, logits_h)?;
    check_one_hot(y_v, logits_v)?;
    let floor = PROB_FLOOR.ln();
    let part = |y: &[f64], z: &[f64]| -> f64 {
        z.iter()
            .zip(y)
            .map(|(&x, &t)| -(t * log_sigmoid(x).max(floor) + (1.0 - t) * log_sigmoid(-x).max(floor)))
            .sum()
    };
    Ok(part(y_h, logits_h) + part(y_v, logits_v))
}

/// `K × V` cost of associating detection `k` with VE `v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix {
    /// Row-major values.
    pub values: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
    /// Identity of each row (detection index within the frame).
    pub k_ids: Vec<usize>,
    /// Identity of each column (VE id).
    pub v_ids: Vec<u32>,
}

impl CostMatrix {
    pub fn get(&self, k: usize, v: usize) -> f64 {
        self.values[k * self.cols + v]
    }
}

pub fn build_cost_matrix(dets: &[Detection], reports: &[BeamReport], kind: CostKind) -> Result<CostMatrix> {
    let mut values = Vec::with_capacity(dets.len() * reports.len());
    for d in dets {
        for r in reports {
            if d.logits_h.len() != r.n_h || d.logits_v.len() != r.n_v {
                return Err(Error::SchemaMismatch(format!(
                    "detection logits {}x{} vs codebooks {}x{}",
                    d.logits_h.len(),
                    d.logits_v.len(),
                    r.n_h,
                    r.n_v
                )));
            }
            let c = match kind {
                CostKind::Cce => cce_cost(&r.y_h(), &r.y_v(), &d.logits_h, &d.logits_v)?,
                CostKind::Bce => bce_cost(&r.y_h(), &r.y_v(), &d.logits_h, &d.logits_v)?,
            };
            values.push(c);
        }
    }
    Ok(CostMatrix {
        values,
        rows: dets.len(),
        cols: reports.len(),
        k_ids: (0..dets.len()).collect(),
        v_ids: reports.iter().map(|r| r.ve_id).collect(),
    })
}

/// Optimal assignment of a cost matrix; see [`solve_lexicographic`].
pub fn solve_assignment(c: &CostMatrix) -> Result<Assignment> {
    if c.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig("cost matrix has non-finite entries".into()));
    }
    Ok(solve_lexicographic(&c.values, c.rows, c.cols))
}

/// Frame-level association result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationResult {
    pub cost: CostMatrix,
    pub assignment: Assignment,
    /// Detections left without a VE (clutter).
    pub unassigned_dets: Vec<usize>,
    /// VE ids left without a detection (missed).
    pub unassigned_ves: Vec<u32>,
}

/// Builds the cost matrix, solves it and optionally drops pairs whose cost
/// exceeds `gate`.
pub fn associate(dets: &[Detection], reports: &[BeamReport], kind: CostKind, gate: Option<f64>) -> Result<AssociationResult> {
    let cost = build_cost_matrix(dets, reports, kind)?;
    let mut assignment = solve_assignment(&cost)?;
    if let Some(g) = gate {
        assignment.pairs.retain(|&(k, v)| cost.get(k, v) <= g);
        assignment.total_cost = assignment.pairs.iter().map(|&(k, v)| cost.get(k, v)).sum();
    }
    let unassigned_dets = (0..cost.rows).filter(|k| !assignment.pairs.iter().any(|p| p.0 == *k)).collect();
    let unassigned_ves = (0..cost.cols)
        .filter(|v| !assignment.pairs.iter().any(|p| p.1 == *v))
        .map(|v| cost.v_ids[v])
        .collect();
    Ok(AssociationResult { cost, assignment, unassigned_dets, unassigned_ves })
}

/// Links each detection to the VE whose ground-truth box it overlaps best,
/// greedily by descending IoU, requiring IoU ≥ `thr`.
pub fn link_detections(dets: &[BoundingBox], ves: &[(u32, BoundingBox)], thr: f64) -> Vec<Option<u32>> {
    let mut cand: Vec<(f64, usize, usize)> = Vec::new();
    for (k, d) in dets.iter().enumerate() {
        for (v, (_, b)) in ves.iter().enumerate() {
            let o = iou(d, b);
            if o >= thr {
                cand.push((o, k, v));
            }
        }
    }
    cand.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal).then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut out = vec![None; dets.len()];
    let mut ve_used = vec![false; ves.len()];
    for (_, k, v) in cand {
        if out[k].is_none() && !ve_used[v] {
            out[k] = Some(ves[v].0);
            ve_used[v] = true;
        }
    }
    out
}

/// Association outcome of one frame, in terms of VE ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameOutcome {
    /// `(detection index, assigned VE id)`.
    pub pairs: Vec<(usize, u32)>,
    /// True VE behind each detection, if any.
    pub truth: Vec<Option<u32>>,
    /// VEs present in the frame.
    pub ve_ids: Vec<u32>,
}

impl FrameOutcome {
    pub fn correct_pairs(&self) -> usize {
        self.pairs.iter().filter(|(k, v)| self.truth.get(*k).copied().flatten() == Some(*v)).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssociationScore {
    pub p_correct: f64,
    pub frames_used: usize,
    /// Frames without any (counted) VE.
    pub frames_skipped: usize,
}

/// Fraction of VEs associated with their own detection, averaged over
/// frames. With `exclude_undetected`, VEs no detection is linked to are left
/// out of the denominator.
pub fn correct_association_prob(frames: &[FrameOutcome], exclude_undetected: bool) -> AssociationScore {
    let mut sum = 0.0;
    let (mut used, mut skipped) = (0, 0);
    for f in frames {
        let denom = if exclude_undetected {
            f.ve_ids.iter().filter(|v| f.truth.contains(&Some(**v))).count()
        } else {
            f.ve_ids.len()
        };
        if denom == 0 {
            skipped += 1;
            continue;
        }
        sum += f.correct_pairs() as f64 / denom as f64;
        used += 1;
    }
    AssociationScore { p_correct: if used > 0 { sum / used as f64 } else { 0.0 }, frames_used: used, frames_skipped: skipped }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_cases() {
        let u = softmax(&[2.0; 4]);
        assert!(u.iter().all(|p| (p - 0.25).abs() < 1e-15));
        let a = softmax(&[0.0, 3f64.ln()]);
        assert!((a[0] - 0.25).abs() < 1e-15 && (a[1] - 0.75).abs() < 1e-15);
        let b = softmax(&[1000.0, 1000.0 + 3f64.ln()]);
        assert!((a[1] - b[1]).abs() < 1e-12);
    }

    #[test]
    fn cce_cases() {
        let mut y = vec![0.0; 8];
        y[3] = 1.0;
        let flat = vec![0.0; 8];
        assert!((cce_cost(&y, &y, &flat, &flat).unwrap() - 2.0 * 8f64.ln()).abs() < 1e-12);
        let mut peaked = vec![0.0; 8];
        peaked[3] = 50.0;
        assert!(cce_cost(&y, &y, &peaked, &peaked).unwrap() < 1e-20);
        assert!(cce_cost(&y, &y[..4], &flat, &flat).is_err());
    }

    #[test]
    fn bce_is_finite_for_large_logits() {
        let y = [0.0, 1.0];
        let c = bce_cost(&y, &y, &[800.0, -800.0], &[0.0, 0.0]).unwrap();
        assert!(c.is_finite() && c > 50.0);
    }

    #[test]
    fn probability_arithmetic() {
        let f1 = FrameOutcome { pairs: vec![(0, 1), (1, 2)], truth: vec![Some(1), Some(2)], ve_ids: vec![1, 2] };
        let f2 = FrameOutcome { pairs: vec![(0, 1), (1, 2)], truth: vec![Some(1), Some(5)], ve_ids: vec![1, 2] };
        let empty = FrameOutcome { pairs: vec![], truth: vec![], ve_ids: vec![] };
        let s = correct_association_prob(&[f1, f2, empty], false);
        assert!((s.p_correct - 0.75).abs() < 1e-15);
        assert_eq!((s.frames_used, s.frames_skipped), (2, 1));
        let swapped = FrameOutcome { pairs: vec![(0, 2), (1, 1)], truth: vec![Some(1), Some(2)], ve_ids: vec![1, 2] };
        assert_eq!(correct_association_prob(&[swapped], false).p_correct, 0.0);
    }

    #[test]
    fn undetected_ves() {
        let f = FrameOutcome { pairs: vec![(0, 1)], truth: vec![Some(1)], ve_ids: vec![1, 2] };
        assert_eq!(correct_association_prob(&[f.clone()], false).p_correct, 0.5);
        assert_eq!(correct_association_prob(&[f], true).p_correct, 1.0);
    }
}

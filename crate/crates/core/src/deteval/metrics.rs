use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::losses::iou;
use crate::scene::BoundingBox;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    pub iou_thresholds: Vec<f64>,
    pub lambda: f64,
    pub mu: f64,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self { iou_thresholds: coco_thresholds(), lambda: 1.0, mu: 1.0 }
    }
}

/// 0.50, 0.55, …, 0.95.
pub fn coco_thresholds() -> Vec<f64> {
    (0..10).map(|i| 0.5 + 0.05 * i as f64).collect()
}

/// Number of recall points of the interpolated AP.
pub const AP_POINTS: usize = 101;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalDetection {
    pub bbox: BoundingBox,
    pub class: usize,
    pub confidence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalGroundTruth {
    pub bbox: BoundingBox,
    pub class: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub confidence: f64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapReport {
    /// Micro-averaged over classes at IoU 0.5, at the confidence that
    /// maximizes F1.
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub best_confidence: f64,
    /// Same counts with every detection kept.
    pub precision_all: f64,
    pub recall_all: f64,
    pub map50: f64,
    pub map50_95: f64,
    /// AP at IoU 0.5 per class, `None` for classes absent from the ground
    /// truth.
    pub per_class_ap50: Vec<Option<f64>>,
    pub pr_curve: Vec<PrPoint>,
}

/// Greedy matching of one class at one IoU threshold. Returns the detections
/// as `(confidence, is_tp)` sorted by descending confidence, and the number
/// of ground-truth boxes.
fn match_class(
    dets: &[Vec<EvalDetection>],
    gts: &[Vec<EvalGroundTruth>],
    class: Option<usize>,
    thr: f64,
) -> (Vec<(f64, bool)>, usize) {
    let keep = |c: usize| class.map_or(true, |k| k == c);
    let mut order: Vec<(usize, usize)> = Vec::new();
    for (f, ds) in dets.iter().enumerate() {
        for (i, d) in ds.iter().enumerate() {
            if keep(d.class) {
                order.push((f, i));
            }
        }
    }
    order.sort_by(|a, b| {
        dets[b.0][b.1]
            .confidence
            .partial_cmp(&dets[a.0][a.1].confidence)
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(b))
    });
    let mut used: Vec<Vec<bool>> = gts.iter().map(|g| vec![false; g.len()]).collect();
    let n_gt = gts.iter().flatten().filter(|g| keep(g.class)).count();
    let mut out = Vec::with_capacity(order.len());
    for (f, i) in order {
        let d = &dets[f][i];
        let mut best: Option<(usize, f64)> = None;
        if let Some(frame_gts) = gts.get(f) {
            for (g, gt) in frame_gts.iter().enumerate() {
                if used[f][g] || gt.class != d.class {
                    continue;
                }
                let o = iou(&d.bbox, &gt.bbox);
                if o >= thr && best.map_or(true, |(_, b)| o > b) {
                    best = Some((g, o));
                }
            }
        }
        if let Some((g, _)) = best {
            used[f][g] = true;
        }
        out.push((d.confidence, best.is_some()));
    }
    (out, n_gt)
}

/// 101-point interpolated average precision of a ranked TP/FP list.
pub fn average_precision(ranked: &[(f64, bool)], n_gt: usize) -> f64 {
    if n_gt == 0 {
        return 0.0;
    }
    let mut prec = Vec::with_capacity(ranked.len());
    let mut rec = Vec::with_capacity(ranked.len());
    let mut tp = 0usize;
    for (k, (_, hit)) in ranked.iter().enumerate() {
        if *hit {
            tp += 1;
        }
        prec.push(tp as f64 / (k + 1) as f64);
        rec.push(tp as f64 / n_gt as f64);
    }
    // Precision envelope from the right.
    for k in (0..prec.len().saturating_sub(1)).rev() {
        prec[k] = prec[k].max(prec[k + 1]);
    }
    let mut sum = 0.0;
    for p in 0..AP_POINTS {
        let r = p as f64 / (AP_POINTS - 1) as f64;
        let idx = rec.iter().position(|&x| x >= r - 1e-12);
        sum += idx.map_or(0.0, |i| prec[i]);
    }
    sum / AP_POINTS as f64
}

/// Detection metrics over frames. `dets[f]` and `gts[f]` belong to frame `f`.
pub fn evaluate_map(
    dets: &[Vec<EvalDetection>],
    gts: &[Vec<EvalGroundTruth>],
    n_classes: usize,
    cfg: &MatchConfig,
) -> MapReport {
    let mut per_class_ap50 = vec![None; n_classes];
    let mut per_thr: Vec<Vec<f64>> = vec![Vec::new(); cfg.iou_thresholds.len()];
    for c in 0..n_classes {
        let n_gt = gts.iter().flatten().filter(|g| g.class == c).count();
        if n_gt == 0 {
            continue;
        }
        let (ranked, _) = match_class(dets, gts, Some(c), 0.5);
        per_class_ap50[c] = Some(average_precision(&ranked, n_gt));
        for (t, &thr) in cfg.iou_thresholds.iter().enumerate() {
            let (ranked, _) = match_class(dets, gts, Some(c), thr);
            per_thr[t].push(average_precision(&ranked, n_gt));
        }
    }
    let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
    let present: Vec<f64> = per_class_ap50.iter().flatten().copied().collect();
    let map50 = mean(&present);
    let map50_95 = mean(&per_thr.iter().map(|v| mean(v)).collect::<Vec<_>>());

    // Micro-averaged operating points at IoU 0.5, class-aware matching.
    let mut ranked = Vec::new();
    let mut n_gt = 0;
    for c in 0..n_classes {
        let (r, n) = match_class(dets, gts, Some(c), 0.5);
        ranked.extend(r);
        n_gt += n;
    }
    ranked.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal));
    let mut pr_curve = Vec::new();
    let mut tp = 0usize;
    let (mut best_f1, mut best) = (-1.0, PrPoint { confidence: 1.0, precision: 0.0, recall: 0.0 });
    for (k, (conf, hit)) in ranked.iter().enumerate() {
        if *hit {
            tp += 1;
        }
        // Only evaluate at the last detection of a confidence level.
        if ranked.get(k + 1).is_some_and(|n| n.0 == *conf) {
            continue;
        }
        let precision = tp as f64 / (k + 1) as f64;
        let recall = if n_gt > 0 { tp as f64 / n_gt as f64 } else { 0.0 };
        let point = PrPoint { confidence: *conf, precision, recall };
        let f1 = f1_score(precision, recall);
        if f1 > best_f1 {
            best_f1 = f1;
            best = point;
        }
        pr_curve.push(point);
    }
    let (precision_all, recall_all) = pr_curve.last().map_or((0.0, 0.0), |p| (p.precision, p.recall));
    MapReport {
        precision: best.precision,
        recall: best.recall,
        f1: best_f1.max(0.0),
        best_confidence: best.confidence,
        precision_all,
        recall_all,
        map50,
        map50_95,
        per_class_ap50,
        pr_curve,
    }
}

pub fn f1_score(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

/// One beam prediction: logits of both axes and the true indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamSample {
    pub logits_h: Vec<f64>,
    pub logits_v: Vec<f64>,
    pub true_h: usize,
    pub true_v: usize,
}

fn in_top_k(logits: &[f64], truth: usize, k: usize) -> bool {
    let t = logits[truth];
    logits.iter().filter(|&&l| l > t).count() < k
}

/// Mean over samples of the horizontal/vertical average of
/// `1[true index among the k largest logits]`.
pub fn topk_beam_accuracy(samples: &[BeamSample], k: usize) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let hits: f64 = samples
        .iter()
        .map(|s| {
            let h = in_top_k(&s.logits_h, s.true_h, k) as u8 as f64;
            let v = in_top_k(&s.logits_v, s.true_v, k) as u8 as f64;
            (h + v) / 2.0
        })
        .sum();
    hits / samples.len() as f64
}

/// Row of a metrics report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub array_size: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub map50: f64,
    pub map50_95: f64,
    /// Top-1 … top-5 beam accuracy.
    pub topk: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(x: f64, conf: f64) -> EvalDetection {
        EvalDetection { bbox: BoundingBox::new(x, 0.5, 0.1, 0.1), class: 0, confidence: conf }
    }

    fn gt(x: f64) -> EvalGroundTruth {
        EvalGroundTruth { bbox: BoundingBox::new(x, 0.5, 0.1, 0.1), class: 0 }
    }

    #[test]
    fn perfect() {
        let dets = vec![vec![det(0.2, 1.0), det(0.6, 1.0)], vec![det(0.4, 1.0)]];
        let gts = vec![vec![gt(0.2), gt(0.6)], vec![gt(0.4)]];
        let r = evaluate_map(&dets, &gts, 3, &MatchConfig::default());
        for v in [r.precision, r.recall, r.f1, r.map50, r.map50_95] {
            assert_eq!(v, 1.0);
        }
        assert_eq!(r.per_class_ap50, vec![Some(1.0), None, None]);
    }

    #[test]
    fn nothing_detected() {
        let r = evaluate_map(&[vec![]], &[vec![gt(0.2)]], 3, &MatchConfig::default());
        assert_eq!((r.recall, r.map50, r.map50_95), (0.0, 0.0, 0.0));
    }

    #[test]
    fn tp_then_fp() {
        let tp = EvalDetection { bbox: BoundingBox::new(0.2, 0.5, 0.1, 0.08), class: 0, confidence: 0.9 };
        assert!((iou(&tp.bbox, &gt(0.2).bbox) - 0.8).abs() < 1e-12);
        let r = evaluate_map(&[vec![tp, det(0.8, 0.8)]], &[vec![gt(0.2)]], 1, &MatchConfig::default());
        assert!((r.map50 - 1.0).abs() < 1e-12);
        assert!((r.precision_all - 0.5).abs() < 1e-12);
        assert_eq!((r.precision, r.recall), (1.0, 1.0));
    }

    #[test]
    fn topk_basics() {
        let s = BeamSample { logits_h: vec![0.1, 0.9, 0.3], logits_v: vec![1.0, 0.0], true_h: 2, true_v: 0 };
        assert_eq!(topk_beam_accuracy(&[s.clone()], 1), 0.5);
        assert_eq!(topk_beam_accuracy(&[s.clone()], 2), 1.0);
        assert_eq!(topk_beam_accuracy(&[s], 3), 1.0);
    }
}

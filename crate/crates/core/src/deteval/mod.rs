//! Box overlap measures, training losses and detection / beam-prediction
//! metrics.

mod losses;
mod metrics;

pub use losses::{bce_grad, bce_loss, ciou_grad, ciou_loss, dfl_loss, diou_loss, iou, tal_score, Dual, Real, EPS};
pub use metrics::{
    average_precision, coco_thresholds, evaluate_map, f1_score, topk_beam_accuracy, BeamSample, EvalDetection,
    EvalGroundTruth, MapReport, MatchConfig, MetricsReport, PrPoint, AP_POINTS,
};

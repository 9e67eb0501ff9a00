//! Reference target detector for range–angle images: CA-CFAR, clustering,
//! size-based class scores and geometric beam logits, plus non-maximum
//! suppression and the detections interchange format.

mod cfar;
mod io;
mod reference;

pub use cfar::{cfar_clusters, cfar_detect_and_cluster, cfar_mask, cfar_threshold, pixel_box, CfarConfig, Cluster};
pub use io::{read_detections, write_detections, DetectionsHeader, DETECTIONS_FORMAT};
pub use reference::{
    assign_beam_logits, beam_logits_towards, infer_beam_logits, nms, threshold_classes, BeamGeometry, ClassDecision, Detection,
    DetectorConfig, ReferenceDetector, DEFAULT_GAMMA_CLASS, DEFAULT_SHARPNESS,
};

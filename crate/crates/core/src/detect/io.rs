use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::reference::Detection;
use crate::error::{Error, Result};
use crate::radarsim::Provenance;
use crate::scene::BoundingBox;
use crate::N_CLASSES;

pub const DETECTIONS_FORMAT: &str = "isac-detections";

/// First line of a detections file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionsHeader {
    pub format: String,
    pub version: u32,
    pub n_h: usize,
    pub n_v: usize,
    pub c_target: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec_hash: Option<String>,
}

impl DetectionsHeader {
    pub fn new(n_h: usize, n_v: usize, provenance: Option<Provenance>) -> Self {
        Self {
            format: DETECTIONS_FORMAT.into(),
            version: 1,
            n_h,
            n_v,
            c_target: N_CLASSES,
            seed: provenance.map(|p| p.seed),
            spec_hash: provenance.map(|p| p.hash_hex()),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Record {
    frame: usize,
    x: f64,
    y: f64,
    w: f64,
    h: f64,
    conf: f64,
    class_scores: Vec<f64>,
    logits_h: Vec<f64>,
    logits_v: Vec<f64>,
}

/// Writes the header and one JSON record per detection. Floats are written
/// in shortest round-trip form, so reading back is exact.
pub fn write_detections<W: Write>(mut out: W, header: &DetectionsHeader, dets: &[(usize, Detection)]) -> Result<()> {
    writeln!(out, "{}", serde_json::to_string(header).expect("header serializes"))?;
    for (frame, d) in dets {
        let rec = Record {
            frame: *frame,
            x: d.bbox.x,
            y: d.bbox.y,
            w: d.bbox.w,
            h: d.bbox.h,
            conf: d.confidence,
            class_scores: d.class_scores.to_vec(),
            logits_h: d.logits_h.clone(),
            logits_v: d.logits_v.clone(),
        };
        writeln!(out, "{}", serde_json::to_string(&rec).expect("record serializes"))?;
    }
    Ok(())
}

/// Reads a detections file. An empty input yields no header and no records.
pub fn read_detections<R: BufRead>(input: R) -> Result<(Option<DetectionsHeader>, Vec<(usize, Detection)>)> {
    let mut header: Option<DetectionsHeader> = None;
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let perr = |e: serde_json::Error| Error::Parse { line: lineno, message: e.to_string() };
        let Some(h) = &header else {
            let h: DetectionsHeader = serde_json::from_str(&line).map_err(perr)?;
            if h.format != DETECTIONS_FORMAT {
                return Err(Error::Parse { line: lineno, message: format!("unexpected format {:?}", h.format) });
            }
            if h.c_target != N_CLASSES {
                return Err(Error::SchemaMismatch(format!("line {lineno}: {} target classes, expected {N_CLASSES}", h.c_target)));
            }
            header = Some(h);
            continue;
        };
        let r: Record = serde_json::from_str(&line).map_err(perr)?;
        let schema = |what: &str, got: usize, want: usize| {
            Error::SchemaMismatch(format!("line {lineno}: {what} has length {got}, header declares {want}"))
        };
        if r.logits_h.len() != h.n_h {
            return Err(schema("logits_h", r.logits_h.len(), h.n_h));
        }
        if r.logits_v.len() != h.n_v {
            return Err(schema("logits_v", r.logits_v.len(), h.n_v));
        }
        if r.class_scores.len() != N_CLASSES {
            return Err(schema("class_scores", r.class_scores.len(), N_CLASSES));
        }
        let mut class_scores = [0.0; N_CLASSES];
        class_scores.copy_from_slice(&r.class_scores);
        out.push((
            r.frame,
            Detection {
                bbox: BoundingBox::new(r.x, r.y, r.w, r.h),
                confidence: r.conf,
                class_scores,
                logits_h: r.logits_h,
                logits_v: r.logits_v,
            },
        ));
    }
    Ok((header, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input() {
        let (h, d) = read_detections("".as_bytes()).unwrap();
        assert!(h.is_none() && d.is_empty());
    }

    #[test]
    fn wrong_logit_length() {
        let text = "{\"format\":\"isac-detections\",\"version\":1,\"n_h\":2,\"n_v\":2,\"c_target\":3}\n\
                    {\"frame\":0,\"x\":0.5,\"y\":0.5,\"w\":0.1,\"h\":0.1,\"conf\":0.9,\"class_scores\":[1,0,0],\"logits_h\":[0,1,2],\"logits_v\":[0,1]}\n";
        assert!(matches!(read_detections(text.as_bytes()), Err(Error::SchemaMismatch(_))));
    }

    #[test]
    fn malformed_line_number() {
        let text = "{\"format\":\"isac-detections\",\"version\":1,\"n_h\":2,\"n_v\":2,\"c_target\":3}\n\nnot json\n";
        assert!(matches!(read_detections(text.as_bytes()), Err(Error::Parse { line: 3, .. })));
    }
}

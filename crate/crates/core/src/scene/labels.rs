use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::bbox::BoundingBox;
use super::vehicle::VehicleClass;
use crate::error::{Error, Result};
use crate::radarsim::Provenance;

/// Ground truth for one vehicle in one frame. Beam indices are 0-based here
/// and only present for communicating vehicles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthLabel {
    pub frame: usize,
    pub target_id: u32,
    pub bbox: BoundingBox,
    pub class: VehicleClass,
    pub is_ve: bool,
    pub beam_h: Option<usize>,
    pub beam_v: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct LabelRecord {
    frame: usize,
    target_id: u32,
    x: f64,
    y: f64,
    w: f64,
    h: f64,
    class: VehicleClass,
    is_ve: bool,
    /// 1-based.
    f_h: Option<usize>,
    f_v: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct LabelHeader {
    format: String,
    version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    spec_hash: Option<String>,
}

const FORMAT: &str = "isac-labels";

pub fn write_labels<W: Write>(mut out: W, labels: &[GroundTruthLabel], provenance: Option<Provenance>) -> Result<()> {
    let header = LabelHeader {
        format: FORMAT.into(),
        version: 1,
        seed: provenance.map(|p| p.seed),
        spec_hash: provenance.map(|p| p.hash_hex()),
    };
    writeln!(out, "{}", serde_json::to_string(&header).expect("header serializes"))?;
    for l in labels {
        let rec = LabelRecord {
            frame: l.frame,
            target_id: l.target_id,
            x: l.bbox.x,
            y: l.bbox.y,
            w: l.bbox.w,
            h: l.bbox.h,
            class: l.class,
            is_ve: l.is_ve,
            f_h: l.beam_h.map(|b| b + 1),
            f_v: l.beam_v.map(|b| b + 1),
        };
        writeln!(out, "{}", serde_json::to_string(&rec).expect("record serializes"))?;
    }
    Ok(())
}

pub fn read_labels<R: BufRead>(input: R) -> Result<Vec<GroundTruthLabel>> {
    let mut out = Vec::new();
    let mut seen_header = false;
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |e: serde_json::Error| Error::Parse { line: lineno, message: e.to_string() };
        if !seen_header {
            let h: LabelHeader = serde_json::from_str(&line).map_err(parse_err)?;
            if h.format != FORMAT {
                return Err(Error::Parse { line: lineno, message: format!("unexpected format {:?}", h.format) });
            }
            seen_header = true;
            continue;
        }
        let r: LabelRecord = serde_json::from_str(&line).map_err(parse_err)?;
        let zero_based = |b: Option<usize>| match b {
            Some(0) => Err(Error::Parse { line: lineno, message: "beam indices are 1-based".into() }),
            b => Ok(b.map(|v| v - 1)),
        };
        out.push(GroundTruthLabel {
            frame: r.frame,
            target_id: r.target_id,
            bbox: BoundingBox::new(r.x, r.y, r.w, r.h),
            class: r.class,
            is_ve: r.is_ve,
            beam_h: zero_based(r.f_h)?,
            beam_v: zero_based(r.f_v)?,
        });
    }
    Ok(out)
}

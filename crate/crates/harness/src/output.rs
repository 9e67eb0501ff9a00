//! Writers for the files the CLI emits. Each one carries the seed and the
//! configuration hash.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

use isac_core::radarsim::Provenance;

use crate::config::ExperimentConfig;
use crate::sweep::CurvePoint;

pub fn provenance(cfg: &ExperimentConfig) -> Provenance {
    Provenance { seed: cfg.experiment.seed, spec_hash: cfg.spec_hash() }
}

/// Creates `dir/name` and hands a buffered writer to `f`.
pub fn write_file<F>(dir: &Path, name: &str, f: F) -> anyhow::Result<PathBuf>
where
    F: FnOnce(&mut BufWriter<File>) -> anyhow::Result<()>,
{
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    f(&mut w)?;
    w.flush()?;
    Ok(path)
}

/// CSV of curve points behind a `#` provenance comment.
pub fn write_curve_csv<W: Write>(mut out: W, points: &[CurvePoint], prov: Provenance) -> anyhow::Result<()> {
    writeln!(out, "# seed={} spec_hash={}", prov.seed, prov.hash_hex())?;
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_curve_csv(text: &str) -> anyhow::Result<Vec<CurvePoint>> {
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut r = csv::Reader::from_reader(body.as_bytes());
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

#[derive(Serialize)]
struct JsonlHeader<'a> {
    format: &'a str,
    version: u32,
    seed: u64,
    spec_hash: String,
}

/// Newline-delimited JSON with a provenance header line.
pub fn write_jsonl<W: Write, T: Serialize>(mut out: W, format: &str, prov: Provenance, records: &[T]) -> anyhow::Result<()> {
    let header = JsonlHeader { format, version: 1, seed: prov.seed, spec_hash: prov.hash_hex() };
    writeln!(out, "{}", serde_json::to_string(&header)?)?;
    for r in records {
        writeln!(out, "{}", serde_json::to_string(r)?)?;
    }
    Ok(())
}

//! Subcommands behind the CLI. Each writes its files into an output directory
//! and returns their paths.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use rayon::prelude::*;
use serde::Serialize;

use isac_core::assoc::correct_association_prob;
use isac_core::comm::{write_beam_reports, CodebookPair};
use isac_core::detect::{assign_beam_logits, write_detections, DetectionsHeader};
use isac_core::deteval::{evaluate_map, topk_beam_accuracy, BeamSample, EvalDetection, EvalGroundTruth, MatchConfig, MetricsReport};
use isac_core::radarsim::{to_range_angle_image, write_image_dump, write_pgm, RadarImage};
use isac_core::rng::{derive_seed, purpose};
use isac_core::scene::{true_beam_indices, write_labels, GroundTruthLabel, Scenario, LABEL_SNR_DB};
use isac_core::N_CLASSES;

use crate::config::ExperimentConfig;
use crate::output::{provenance, write_curve_csv, write_file, write_jsonl};
use crate::pipeline::{beam_geometry, communicate, ve_channels, SensedFrame};
use crate::sweep::{trial_seed, CurvePoint, Diagnostics, Experiment};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Detect,
    Associate,
    SweepSnr,
    SweepClutter,
    SweepMatrix,
    EvalMetrics,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Simulate,
        Command::Detect,
        Command::Associate,
        Command::SweepSnr,
        Command::SweepClutter,
        Command::SweepMatrix,
        Command::EvalMetrics,
    ];
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Worker threads, `0` for one per core.
    pub threads: usize,
    pub dump_images: bool,
}

/// Runs `cmd` on a dedicated pool of `opts.threads` workers.
pub fn run(cmd: Command, cfg: ExperimentConfig, out_dir: &Path, opts: RunOptions) -> anyhow::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(opts.threads).build()?;
    pool.install(|| {
        let exp = Experiment::new(cfg)?;
        match cmd {
            Command::Simulate => simulate(&exp, out_dir, opts.dump_images),
            Command::Detect => detect(&exp, out_dir),
            Command::Associate => associate(&exp, out_dir),
            Command::SweepSnr => sweep(&exp, out_dir, "sweep_snr.csv", Experiment::sweep_snr),
            Command::SweepClutter => sweep(&exp, out_dir, "sweep_clutter.csv", Experiment::sweep_clutter),
            Command::SweepMatrix => sweep(&exp, out_dir, "sweep_matrix.csv", Experiment::sweep_matrix),
            Command::EvalMetrics => eval_metrics(&exp, out_dir),
        }
    })
}

/// Frames of the single scene used by `simulate`, `detect` and `associate`:
/// trial 0 of the configured scene family.
struct SceneRun {
    seed: u64,
    frames: Vec<(RadarImage, SensedFrame)>,
    diagnostics: Diagnostics,
}

fn scene_run(exp: &Experiment) -> anyhow::Result<SceneRun> {
    let cfg = &exp.cfg;
    let seed = trial_seed(cfg.experiment.seed, 0);
    let sc = Scenario::build(cfg.generator(cfg.scenario.n_ve, cfg.scenario.n_clutter).generate(seed)?)?;
    let geom = beam_geometry(exp.sensor.pose, 2, cfg.detect.sharpness);
    let books = CodebookPair::dft(2, 2);
    let results: Vec<_> =
        (0..sc.config.steps()).into_par_iter().map(|k| exp.sensor.sense(&sc, k, seed, &geom, &books)).collect();
    let mut diagnostics = Diagnostics::default();
    let mut frames = Vec::new();
    for r in results {
        match r {
            Ok(f) => {
                diagnostics.frames_ok += 1;
                frames.push(f);
            }
            Err(e) => {
                diagnostics.frames_failed += 1;
                *diagnostics.reasons.entry(e.to_string()).or_default() += 1;
            }
        }
    }
    Ok(SceneRun { seed, frames, diagnostics })
}

fn write_diagnostics(dir: &Path, exp: &Experiment, d: &Diagnostics) -> anyhow::Result<PathBuf> {
    write_file(dir, "diagnostics.jsonl", |w| write_jsonl(w, "isac-diagnostics", provenance(&exp.cfg), &[d]))
}

/// Ground-truth labels of a frame with beams from training at the label SNR.
pub fn frame_labels(exp: &Experiment, f: &SensedFrame, n: usize, seed: u64) -> anyhow::Result<Vec<GroundTruthLabel>> {
    let cfg = &exp.cfg;
    let tx = CodebookPair::dft(n, n);
    let rx = CodebookPair::dft(cfg.comm.ue_n_h, cfg.comm.ue_n_v);
    let channels = ve_channels(cfg, &exp.sensor.pose, f, n, seed);
    let mut out = Vec::new();
    for v in &f.vehicles {
        let Some(bbox) = v.bbox else { continue };
        let beams = match channels.iter().find(|(id, _)| *id == v.id) {
            Some((_, ch)) => {
                let s = derive_seed(seed, &[purpose::LABELS, f.frame as u64, v.id as u64, n as u64]);
                Some(true_beam_indices(ch, &tx, &rx, LABEL_SNR_DB, s)?)
            }
            None => None,
        };
        out.push(GroundTruthLabel {
            frame: f.frame,
            target_id: v.id,
            bbox,
            class: v.class,
            is_ve: v.is_ve,
            beam_h: beams.map(|b| b.0),
            beam_v: beams.map(|b| b.1),
        });
    }
    Ok(out)
}

fn simulate(exp: &Experiment, dir: &Path, dump: bool) -> anyhow::Result<Vec<PathBuf>> {
    let run = scene_run(exp)?;
    let prov = provenance(&exp.cfg);
    let mut paths = Vec::new();
    for (image, f) in &run.frames {
        let ra = to_range_angle_image(image, exp.cfg.radar.dynamic_range_db)?;
        paths.push(write_file(dir, &format!("frame_{:04}.pgm", f.frame), |w| Ok(write_pgm(w, &ra.values, Some(prov))?))?);
        if dump {
            let r = &exp.cfg.radar;
            paths.push(write_file(dir, &format!("frame_{:04}.bin", f.frame), |w| {
                Ok(write_image_dump(w, image, r.f0_hz, r.bandwidth_hz, prov)?)
            })?);
        }
    }
    for &n in &exp.cfg.comm.array_sizes {
        let mut labels = Vec::new();
        for (_, f) in &run.frames {
            labels.extend(frame_labels(exp, f, n, run.seed)?);
        }
        paths.push(write_file(dir, &format!("labels_{n}x{n}.jsonl"), |w| Ok(write_labels(w, &labels, Some(prov))?))?);
    }
    paths.push(write_diagnostics(dir, exp, &run.diagnostics)?);
    Ok(paths)
}

fn detect(exp: &Experiment, dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let run = scene_run(exp)?;
    let prov = provenance(&exp.cfg);
    let mut paths = Vec::new();
    for &n in &exp.cfg.comm.array_sizes {
        let geom = beam_geometry(exp.sensor.pose, n, exp.cfg.detect.sharpness);
        let tx = CodebookPair::dft(n, n);
        let mut dets = Vec::new();
        for (_, f) in &run.frames {
            for d in &f.detections {
                let mut d = d.clone();
                assign_beam_logits(&mut d, &exp.sensor.grid, &geom, &tx)?;
                dets.push((f.frame, d));
            }
        }
        let header = DetectionsHeader::new(n, n, Some(prov));
        paths.push(write_file(dir, &format!("detections_{n}x{n}.jsonl"), |w| Ok(write_detections(w, &header, &dets)?))?);
    }
    paths.push(write_diagnostics(dir, exp, &run.diagnostics)?);
    Ok(paths)
}

#[derive(Serialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum AssociationRecord {
    Pair { snr_db: f64, frame: usize, det_index: usize, ve_id: u32, cost: f64, correct: bool },
    Summary { snr_db: f64, p_correct: f64, frames: usize, missed_ves: usize },
}

fn associate(exp: &Experiment, dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let run = scene_run(exp)?;
    let cfg = &exp.cfg;
    let prov = provenance(cfg);
    let snrs = &cfg.comm.snr_db;
    let mut paths = Vec::new();
    for &n in &cfg.comm.array_sizes {
        let per_frame: Vec<_> = run
            .frames
            .par_iter()
            .map(|(_, f)| communicate(cfg, &exp.sensor, f, n, snrs, run.seed))
            .collect::<Result<_, _>>()?;
        let mut records = Vec::new();
        let mut reports = Vec::new();
        for (j, &snr) in snrs.iter().enumerate() {
            let mut outcomes = Vec::new();
            let mut missed = 0;
            for ((_, f), frames) in run.frames.iter().zip(&per_frame) {
                let c = &frames[j];
                for &(k, v) in &c.association.assignment.pairs {
                    let ve_id = c.association.cost.v_ids[v];
                    records.push(AssociationRecord::Pair {
                        snr_db: snr,
                        frame: f.frame,
                        det_index: k,
                        ve_id,
                        cost: c.association.cost.get(k, v),
                        correct: c.outcome.truth.get(k).copied().flatten() == Some(ve_id),
                    });
                }
                missed += c.association.unassigned_ves.len();
                reports.extend(c.reports.iter().cloned());
                outcomes.push(c.outcome.clone());
            }
            let score = correct_association_prob(&outcomes, cfg.assoc.exclude_undetected);
            records.push(AssociationRecord::Summary {
                snr_db: snr,
                p_correct: score.p_correct,
                frames: score.frames_used,
                missed_ves: missed,
            });
        }
        paths.push(write_file(dir, &format!("association_{n}x{n}.jsonl"), |w| {
            write_jsonl(w, "isac-association", prov, &records)
        })?);
        paths.push(write_file(dir, &format!("beam_reports_{n}x{n}.jsonl"), |w| {
            Ok(write_beam_reports(w, &reports, Some(prov))?)
        })?);
    }
    paths.push(write_diagnostics(dir, exp, &run.diagnostics)?);
    Ok(paths)
}

fn sweep(exp: &Experiment, dir: &Path, name: &str, f: fn(&Experiment) -> Vec<CurvePoint>) -> anyhow::Result<Vec<PathBuf>> {
    let points = f(exp);
    let prov = provenance(&exp.cfg);
    let csv = write_file(dir, name, |w| write_curve_csv(w, &points, prov))?;
    Ok(vec![csv, write_diagnostics(dir, exp, &exp.cached_diagnostics())?])
}

#[derive(Serialize)]
struct DetectionSummary {
    frames: usize,
    ground_truth: usize,
    per_class_ap50: Vec<Option<f64>>,
}

/// Detection metrics against ground truth and top-k beam accuracy of the
/// detections linked to a VE, over every trial of the configured scene.
fn eval_metrics(exp: &Experiment, dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let cfg = &exp.cfg;
    let trials = exp.trials(cfg.scenario.n_ve, cfg.scenario.n_clutter);
    let frames: Vec<(u64, &SensedFrame)> = trials.iter().flat_map(|t| t.frames.iter().map(move |f| (t.seed, f))).collect();
    let dets: Vec<Vec<EvalDetection>> = frames
        .iter()
        .map(|(_, f)| {
            f.detections
                .iter()
                .map(|d| EvalDetection { bbox: d.bbox, class: d.best_class().0, confidence: d.confidence })
                .collect()
        })
        .collect();
    let gts: Vec<Vec<EvalGroundTruth>> = frames
        .iter()
        .map(|(_, f)| {
            f.vehicles
                .iter()
                .filter_map(|v| v.bbox.map(|bbox| EvalGroundTruth { bbox, class: v.class.index() }))
                .collect()
        })
        .collect();
    let map = evaluate_map(&dets, &gts, N_CLASSES, &MatchConfig::default());

    let mut reports = Vec::new();
    for &n in &cfg.comm.array_sizes {
        let samples = beam_samples(exp, &frames, n)?;
        reports.push(MetricsReport {
            array_size: format!("{n}x{n}"),
            precision: map.precision,
            recall: map.recall,
            f1: map.f1,
            map50: map.map50,
            map50_95: map.map50_95,
            topk: (1..=5).map(|k| topk_beam_accuracy(&samples, k)).collect(),
        });
    }
    let prov = provenance(cfg);
    let summary = DetectionSummary {
        frames: frames.len(),
        ground_truth: gts.iter().map(Vec::len).sum(),
        per_class_ap50: map.per_class_ap50.clone(),
    };
    let json = write_file(dir, "metrics.jsonl", |w| {
        write_jsonl(&mut *w, "isac-metrics", prov, &reports)?;
        writeln!(w, "{}", serde_json::to_string(&summary)?)?;
        Ok(())
    })?;
    let text = write_file(dir, "metrics.txt", |w| {
        writeln!(w, "# seed={} spec_hash={}", prov.seed, prov.hash_hex())?;
        writeln!(w, "frames {} ground_truth {}", summary.frames, summary.ground_truth)?;
        writeln!(w, "{:>8} {:>9} {:>9} {:>9} {:>9} {:>9} {}", "array", "precision", "recall", "f1", "map50", "map50_95", "top1..top5")?;
        for r in &reports {
            let topk: Vec<String> = r.topk.iter().map(|t| format!("{t:.4}")).collect();
            writeln!(
                w,
                "{:>8} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {}",
                r.array_size,
                r.precision,
                r.recall,
                r.f1,
                r.map50,
                r.map50_95,
                topk.join(" ")
            )?;
        }
        Ok(())
    })?;
    Ok(vec![json, text, write_diagnostics(dir, exp, &exp.cached_diagnostics())?])
}

/// Beam logits of every detection linked to a VE, with the VE's label beam.
pub fn beam_samples(exp: &Experiment, frames: &[(u64, &SensedFrame)], n: usize) -> anyhow::Result<Vec<BeamSample>> {
    let geom = beam_geometry(exp.sensor.pose, n, exp.cfg.detect.sharpness);
    let tx = CodebookPair::dft(n, n);
    let per_frame: Vec<Vec<BeamSample>> = frames
        .par_iter()
        .map(|(seed, f)| -> anyhow::Result<Vec<BeamSample>> {
            let labels = frame_labels(exp, f, n, *seed)?;
            let mut out = Vec::new();
            for (d, t) in f.detections.iter().zip(&f.truth) {
                let Some(id) = t else { continue };
                let Some(l) = labels.iter().find(|l| l.target_id == *id) else { continue };
                let (Some(true_h), Some(true_v)) = (l.beam_h, l.beam_v) else { continue };
                let mut d = d.clone();
                assign_beam_logits(&mut d, &exp.sensor.grid, &geom, &tx)?;
                out.push(BeamSample { logits_h: d.logits_h, logits_v: d.logits_v, true_h, true_v });
            }
            Ok(out)
        })
        .collect::<anyhow::Result<_>>()?;
    Ok(per_frame.into_iter().flatten().collect())
}

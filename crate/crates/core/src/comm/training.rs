use std::io::{BufRead, Write};

use ndarray::Array1;
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::array::{inner, steering_vector};
use super::channel::ChannelRealization;
use super::codebook::CodebookPair;
use crate::error::{Error, Result};
use crate::radarsim::Provenance;
use crate::rng::{self, purpose};

/// Outcome of exhaustive beam training for one vehicle. Indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamReport {
    pub ve_id: u32,
    pub frame: usize,
    pub f_h: usize,
    pub f_v: usize,
    /// Composed receive beam index, `r_h · n_v + r_v`.
    pub rx_beam: usize,
    pub n_h: usize,
    pub n_v: usize,
    pub snr_db: f64,
    pub best_power_db: f64,
}

impl BeamReport {
    pub fn y_h(&self) -> Vec<f64> {
        one_hot(self.n_h, self.f_h)
    }

    pub fn y_v(&self) -> Vec<f64> {
        one_hot(self.n_v, self.f_v)
    }
}

fn one_hot(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

fn check_sizes(channel: &ChannelRealization, tx: &CodebookPair, rx: &CodebookPair) -> Result<()> {
    let ok = tx.h.len() == channel.bs.n_h
        && tx.v.len() == channel.bs.n_v
        && rx.h.len() == channel.ue.n_h
        && rx.v.len() == channel.ue.n_v;
    if ok {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "codebooks {}x{} / {}x{} do not match arrays {}x{} / {}x{}",
            tx.h.len(),
            tx.v.len(),
            rx.h.len(),
            rx.v.len(),
            channel.bs.n_h,
            channel.bs.n_v,
            channel.ue.n_h,
            channel.ue.n_v
        )))
    }
}

/// Noiseless beam-pair responses `w_r^H H̃ (f_i ⊗ f_j)` of the path-loss
/// normalized channel, indexed `[(i · n_v + j) · n_rx + r]`.
///
/// Every path factors into per-axis gains, so the table costs
/// `O(P · N_h N_v N_rx)` instead of a matrix product per pair.
pub fn beam_responses(channel: &ChannelRealization, tx: &CodebookPair, rx: &CodebookPair) -> Result<Vec<Complex64>> {
    check_sizes(channel, tx, rx)?;
    let (n_h, n_v, n_rx) = (tx.h.len(), tx.v.len(), rx.len());
    let scale = ((channel.bs.n() * channel.ue.n()) as f64).sqrt();
    let mut out = vec![Complex64::new(0.0, 0.0); n_h * n_v * n_rx];
    for p in &channel.paths {
        let (u_bs, v_bs) = channel.bs.cosines(p.dod);
        let g_h = tx.h.responses(channel.bs.spacing, u_bs);
        let g_v = tx.v.responses(channel.bs.spacing, v_bs);
        let (u_ue, v_ue) = channel.ue.cosines(p.doa);
        // w_r^H a_UE = conj(a_UE^H w_r).
        let r_h = rx.h.responses(channel.ue.spacing, u_ue);
        let r_v = rx.v.responses(channel.ue.spacing, v_ue);
        let g_r: Vec<Complex64> =
            r_h.iter().flat_map(|a| r_v.iter().map(move |b| (a * b).conj())).collect();
        let a = p.alpha * scale;
        for i in 0..n_h {
            for j in 0..n_v {
                let t = a * g_h[i] * g_v[j];
                let base = (i * n_v + j) * n_rx;
                for (r, gr) in g_r.iter().enumerate() {
                    out[base + r] += t * gr;
                }
            }
        }
    }
    Ok(out)
}

/// Exhaustive search over every (horizontal, vertical, receive) beam triple.
///
/// Each measurement is the normalized-channel response plus independent
/// `CN(0, 1/γ)` noise, γ the per-antenna SNR; with unit-norm beams this makes
/// γ the SNR seen by a single receive antenna before any beamforming gain.
/// `snr_db = +∞` disables noise. The strongest measurement wins, ties going
/// to the lowest `(i, j, r)`.
pub fn beam_training(
    channel: &ChannelRealization,
    tx: &CodebookPair,
    rx: &CodebookPair,
    snr_db: f64,
    seed: u64,
) -> Result<BeamReport> {
    let clean = beam_responses(channel, tx, rx)?;
    let noise_var = if snr_db.is_finite() { 10f64.powf(-snr_db / 10.0) } else { 0.0 };
    let s = (noise_var / 2.0).sqrt();
    let mut r = rng::stream(seed, &[purpose::TRAINING]);
    let mut best = (0usize, f64::NEG_INFINITY);
    for (idx, c) in clean.iter().enumerate() {
        let mut y = *c;
        if noise_var > 0.0 {
            let re: f64 = StandardNormal.sample(&mut r);
            let im: f64 = StandardNormal.sample(&mut r);
            y += Complex64::new(re * s, im * s);
        }
        let p = y.norm_sqr();
        if p > best.1 {
            best = (idx, p);
        }
    }
    let n_rx = rx.len();
    let pair = best.0 / n_rx;
    Ok(BeamReport {
        ve_id: 0,
        frame: 0,
        f_h: pair / tx.v.len(),
        f_v: pair % tx.v.len(),
        rx_beam: best.0 % n_rx,
        n_h: tx.h.len(),
        n_v: tx.v.len(),
        snr_db,
        best_power_db: 10.0 * best.1.max(1e-300).log10(),
    })
}

/// Power leaking into a VE's receive beam from beams serving other users,
/// `Σ_u |w^H H̃ f_u|²`.
pub fn interference_power(
    channel: &ChannelRealization,
    rx: &CodebookPair,
    rx_beam: usize,
    tx: &CodebookPair,
    others: &[(usize, usize)],
) -> Result<f64> {
    check_sizes(channel, tx, rx)?;
    let h = channel.normalized_matrix();
    let n_rv = rx.v.len();
    let w = rx.composed(rx_beam / n_rv, rx_beam % n_rv);
    let mut total = 0.0;
    for &(i, j) in others {
        let f = tx.composed(i, j);
        let hf: Array1<Complex64> = h.dot(&f);
        total += inner(&w, &hf).norm_sqr();
    }
    Ok(total)
}

/// Brute-force reference: explicit matrix products for every triple.
pub fn beam_responses_direct(channel: &ChannelRealization, tx: &CodebookPair, rx: &CodebookPair) -> Vec<Complex64> {
    let h = channel.normalized_matrix();
    let mut out = Vec::new();
    for i in 0..tx.h.len() {
        for j in 0..tx.v.len() {
            let hf: Array1<Complex64> = h.dot(&tx.composed(i, j));
            for rh in 0..rx.h.len() {
                for rv in 0..rx.v.len() {
                    out.push(inner(&rx.composed(rh, rv), &hf));
                }
            }
        }
    }
    out
}

/// Gain of composed beam `(i, j)` of `tx` towards a direction, `|a^H f|`.
pub fn composed_gain(tx: &CodebookPair, geom: &super::ArrayGeometry, dir: crate::Direction, i: usize, j: usize) -> f64 {
    inner(&steering_vector(geom, dir), &tx.composed(i, j)).norm()
}

#[derive(Serialize, Deserialize)]
struct ReportRecord {
    frame: usize,
    ve_id: u32,
    f_h: usize,
    f_v: usize,
    n_h: usize,
    n_v: usize,
    rx_beam: usize,
    snr_db: Option<f64>,
    best_power_db: f64,
}

#[derive(Serialize, Deserialize)]
struct ReportHeader {
    format: String,
    version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    spec_hash: Option<String>,
}

const REPORT_FORMAT: &str = "isac-beam-reports";

/// Newline-delimited beam reports with 1-based beam indices.
pub fn write_beam_reports<W: Write>(mut out: W, reports: &[BeamReport], provenance: Option<Provenance>) -> Result<()> {
    let header = ReportHeader {
        format: REPORT_FORMAT.into(),
        version: 1,
        seed: provenance.map(|p| p.seed),
        spec_hash: provenance.map(|p| p.hash_hex()),
    };
    writeln!(out, "{}", serde_json::to_string(&header).expect("header serializes"))?;
    for r in reports {
        let rec = ReportRecord {
            frame: r.frame,
            ve_id: r.ve_id,
            f_h: r.f_h + 1,
            f_v: r.f_v + 1,
            n_h: r.n_h,
            n_v: r.n_v,
            rx_beam: r.rx_beam + 1,
            snr_db: r.snr_db.is_finite().then_some(r.snr_db),
            best_power_db: r.best_power_db,
        };
        writeln!(out, "{}", serde_json::to_string(&rec).expect("record serializes"))?;
    }
    Ok(())
}

pub fn read_beam_reports<R: BufRead>(input: R) -> Result<Vec<BeamReport>> {
    let mut out = Vec::new();
    let mut header = false;
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |m: String| Error::Parse { line: i + 1, message: m };
        if !header {
            let h: ReportHeader = serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
            if h.format != REPORT_FORMAT {
                return Err(err(format!("unexpected format {:?}", h.format)));
            }
            header = true;
            continue;
        }
        let r: ReportRecord = serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
        if r.f_h == 0 || r.f_v == 0 || r.rx_beam == 0 || r.f_h > r.n_h || r.f_v > r.n_v {
            return Err(err("beam index out of range (indices are 1-based)".into()));
        }
        out.push(BeamReport {
            ve_id: r.ve_id,
            frame: r.frame,
            f_h: r.f_h - 1,
            f_v: r.f_v - 1,
            rx_beam: r.rx_beam - 1,
            n_h: r.n_h,
            n_v: r.n_v,
            snr_db: r.snr_db.unwrap_or(f64::INFINITY),
            best_power_db: r.best_power_db,
        });
    }
    Ok(out)
}

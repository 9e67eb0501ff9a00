//! Monte Carlo sweeps of the probability of correct association.
//!
//! Every trial draws its scene from `derive_seed(master, [trial])`, so the
//! same trial index sees the same vehicles (VEs first, clutter after) in every
//! sweep, and sensed frames are cached per `(n_ve, n_clutter)`.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use isac_core::assoc::correct_association_prob;
use isac_core::comm::CodebookPair;
use isac_core::rng::derive_seed;
use isac_core::scene::{default_sensor, Scenario};

use crate::config::ExperimentConfig;
use crate::pipeline::{beam_geometry, communicate, SensedFrame, Sensor};

/// One point of an association curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub array_size: usize,
    pub snr_db: f64,
    pub n_ve: usize,
    pub n_clutter: usize,
    pub p_correct: f64,
    pub stderr: f64,
    pub trials: usize,
}

/// Frames that could not be processed, by reason.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub frames_ok: usize,
    pub frames_failed: usize,
    pub reasons: BTreeMap<String, usize>,
}

impl Diagnostics {
    fn fail(&mut self, reason: String) {
        self.frames_failed += 1;
        *self.reasons.entry(reason).or_default() += 1;
    }

    fn merge(&mut self, other: &Diagnostics) {
        self.frames_ok += other.frames_ok;
        self.frames_failed += other.frames_failed;
        for (k, v) in &other.reasons {
            *self.reasons.entry(k.clone()).or_default() += v;
        }
    }
}

/// Sensed frames of one trial. Frames that failed are left out.
#[derive(Debug, Clone)]
pub struct Trial {
    pub index: u64,
    pub seed: u64,
    pub frames: Vec<SensedFrame>,
    pub diagnostics: Diagnostics,
}

pub fn trial_seed(master: u64, trial: u64) -> u64 {
    derive_seed(master, &[trial])
}

/// Sensor, configuration and the cache of sensed trials.
pub struct Experiment {
    pub cfg: ExperimentConfig,
    pub sensor: Sensor,
    cache: Mutex<HashMap<(usize, usize), Arc<Vec<Trial>>>>,
}

impl Experiment {
    pub fn new(cfg: ExperimentConfig) -> anyhow::Result<Self> {
        cfg.validate()?;
        let sensor = Sensor::new(&cfg, default_sensor())?;
        Ok(Self { cfg, sensor, cache: Mutex::new(HashMap::new()) })
    }

    /// Senses one trial of the `(n_ve, n_clutter)` scene family.
    pub fn sense_trial(&self, n_ve: usize, n_clutter: usize, index: u64) -> Trial {
        let seed = trial_seed(self.cfg.experiment.seed, index);
        let mut diagnostics = Diagnostics::default();
        let mut frames = Vec::new();
        let scenario = self
            .cfg
            .generator(n_ve, n_clutter)
            .generate(seed)
            .and_then(Scenario::build);
        match scenario {
            Ok(sc) => {
                // Logits are recomputed per array size later, any codebook does here.
                let geom = beam_geometry(self.sensor.pose, 2, self.cfg.detect.sharpness);
                let books = CodebookPair::dft(2, 2);
                for k in 0..sc.config.steps() {
                    match self.sensor.sense(&sc, k, seed, &geom, &books) {
                        Ok((_, f)) => {
                            diagnostics.frames_ok += 1;
                            frames.push(f);
                        }
                        Err(e) => diagnostics.fail(e.to_string()),
                    }
                }
            }
            Err(e) => {
                for _ in 0..self.cfg.scenario.frames {
                    diagnostics.fail(e.to_string());
                }
            }
        }
        Trial { index, seed, frames, diagnostics }
    }

    /// All trials of a scene family, sensed once and shared afterwards.
    pub fn trials(&self, n_ve: usize, n_clutter: usize) -> Arc<Vec<Trial>> {
        if let Some(t) = self.cache.lock().expect("cache lock").get(&(n_ve, n_clutter)) {
            return Arc::clone(t);
        }
        let n = self.cfg.experiment.trials as u64;
        let trials: Vec<Trial> = (0..n).into_par_iter().map(|i| self.sense_trial(n_ve, n_clutter, i)).collect();
        let trials = Arc::new(trials);
        self.cache.lock().expect("cache lock").insert((n_ve, n_clutter), Arc::clone(&trials));
        trials
    }

    pub fn diagnostics(&self, n_ve: usize, n_clutter: usize) -> Diagnostics {
        let mut d = Diagnostics::default();
        for t in self.trials(n_ve, n_clutter).iter() {
            d.merge(&t.diagnostics);
        }
        d
    }

    /// Diagnostics of every scene family sensed so far, in key order.
    pub fn cached_diagnostics(&self) -> Diagnostics {
        let cache = self.cache.lock().expect("cache lock");
        let mut keys: Vec<_> = cache.keys().copied().collect();
        keys.sort_unstable();
        let mut d = Diagnostics::default();
        for k in keys {
            for t in cache[&k].iter() {
                d.merge(&t.diagnostics);
            }
        }
        d
    }

    /// Per-trial P(correct) for array size `n` at each SNR. `None` marks a
    /// trial without usable frames.
    fn trial_scores(&self, trial: &Trial, n: usize, snrs: &[f64]) -> Vec<Option<f64>> {
        let mut outcomes = vec![Vec::new(); snrs.len()];
        for f in &trial.frames {
            let Ok(comm) = communicate(&self.cfg, &self.sensor, f, n, snrs, trial.seed) else {
                continue;
            };
            for (o, c) in outcomes.iter_mut().zip(comm) {
                o.push(c.outcome);
            }
        }
        outcomes
            .iter()
            .map(|o| {
                let s = correct_association_prob(o, self.cfg.assoc.exclude_undetected);
                (s.frames_used > 0).then_some(s.p_correct)
            })
            .collect()
    }

    /// Curve points for every array size in `sizes` and SNR in `snrs`, on the
    /// `(n_ve, n_clutter)` scene family.
    pub fn curve(&self, n_ve: usize, n_clutter: usize, sizes: &[usize], snrs: &[f64]) -> Vec<CurvePoint> {
        let trials = self.trials(n_ve, n_clutter);
        let mut out = Vec::with_capacity(sizes.len() * snrs.len());
        for &n in sizes {
            let scores: Vec<Vec<Option<f64>>> =
                trials.par_iter().map(|t| self.trial_scores(t, n, snrs)).collect();
            for (j, &snr) in snrs.iter().enumerate() {
                let xs: Vec<f64> = scores.iter().filter_map(|s| s[j]).collect();
                let (p_correct, stderr) = mean_stderr(&xs);
                out.push(CurvePoint { array_size: n, snr_db: snr, n_ve, n_clutter, p_correct, stderr, trials: xs.len() });
            }
        }
        out
    }

    /// P(correct) against SNR for each configured array size.
    pub fn sweep_snr(&self) -> Vec<CurvePoint> {
        let s = &self.cfg.scenario;
        self.curve(s.n_ve, s.n_clutter, &self.cfg.comm.array_sizes, &self.cfg.comm.snr_db)
    }

    /// P(correct) against the clutter count at the fixed SNR.
    pub fn sweep_clutter(&self) -> Vec<CurvePoint> {
        let e = &self.cfg.experiment;
        let mut out = Vec::new();
        for &c in &e.clutter_counts {
            out.extend(self.curve(e.clutter_n_ve, c, &self.cfg.comm.array_sizes, &[e.fixed_snr_db]));
        }
        out.sort_by_key(|p| (p.array_size, p.n_clutter));
        out
    }

    /// P(correct) over VE count × clutter count for one array size.
    pub fn sweep_matrix(&self) -> Vec<CurvePoint> {
        let e = &self.cfg.experiment;
        let mut out = Vec::new();
        for &v in &e.matrix_n_ve {
            for &c in &e.matrix_clutter {
                out.extend(self.curve(v, c, &[e.matrix_array], &[e.fixed_snr_db]));
            }
        }
        out
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stderr_of_known_sample() {
        let (m, s) = mean_stderr(&[0.0, 1.0, 0.0, 1.0]);
        assert_eq!(m, 0.5);
        assert!((s - (1.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_stderr(&[]), (0.0, 0.0));
        assert_eq!(mean_stderr(&[0.3]), (0.3, 0.0));
    }
}

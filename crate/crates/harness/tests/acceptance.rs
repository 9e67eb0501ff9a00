//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

use std::path::Path;
use std::time::Instant;

use ndarray::Array2;
use rand::Rng;

use isac_core::assoc::{brute_force_min, solve_lexicographic};
use isac_core::detect::{cfar_clusters, CfarConfig};
use isac_core::deteval::{
    bce_grad, bce_loss, ciou_grad, ciou_loss, dfl_loss, evaluate_map, iou, tal_score, topk_beam_accuracy, BeamSample,
    EvalDetection, EvalGroundTruth, MatchConfig, AP_POINTS,
};
use isac_core::geometry::{Pose, Vec3};
use isac_core::radarsim::{
    backproject, range_compress, scattering_amplitude, synthesize_rx, Axis, PixelGrid, PointTarget, RadarArray,
    RadarWaveform,
};
use isac_core::rng;
use isac_core::scene::BoundingBox;
use isac_harness::commands::{beam_samples, run, Command, RunOptions};
use isac_harness::config::ExperimentConfig;
use isac_harness::sweep::{CurvePoint, Experiment};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

const FS: f64 = 40e6;

fn main() {
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let criteria: [(usize, &str, fn() -> Outcome); 8] = [
        (1, "range resolution", range_resolution),
        (2, "back-projection peak", backprojection),
        (3, "loss oracles", loss_oracles),
        (4, "assignment optimality", hungarian),
        (5, "mAP oracle", map_oracle),
        (6, "association trends", association_trends),
        (7, "determinism", determinism),
        (8, "top-k monotonicity", topk),
    ];
    let mut failed = 0;
    for (id, name, f) in criteria {
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let t0 = Instant::now();
        let o = f();
        let secs = t0.elapsed().as_secs_f64();
        println!("criterion {id} ({name}): {} [{secs:.1}s] {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    if only.is_none() {
        println!("criterion 9 (trained-network tables and figures): OUT OF SCOPE");
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

fn mono() -> RadarArray {
    RadarArray::planar(Pose::new(Vec3::new(0.0, 0.0, 0.0), 0.0), 1, 1, 0.0)
}

/// Two equal scatterers on boresight, `sep` metres apart in range, counted
/// by CA-CFAR on the range profile. The second echo is put in quadrature with
/// the first, so the pair adds in power as in the usual resolution criterion;
/// coherent pairs can cancel or reinforce depending on the carrier phase.
fn cfar_count(sep: f64) -> usize {
    let w = RadarWaveform::default();
    let profile = |targets: &[PointTarget]| {
        let f = synthesize_rx(targets, &w, &mono(), 0, FS, 0.0, 0).unwrap();
        range_compress(&f, &w).unwrap()
    };
    let a = PointTarget::new(Vec3::new(30.0, 0.0, 0.0), 1.0);
    let mut b = PointTarget::new(Vec3::new(30.0 + sep, 0.0, 0.0), 1.0);
    let tau = |t: &PointTarget| 2.0 * t.position.x / isac_core::SPEED_OF_LIGHT;
    let pa = profile(&[a]).sample_at(0, tau(&a)).arg();
    let pb = profile(&[b]).sample_at(0, tau(&b)).arg();
    b.phase = (pa - pb + std::f64::consts::FRAC_PI_2).rem_euclid(std::f64::consts::TAU);
    let p = profile(&[a, b]);
    let row: Vec<f64> = p.samples.row(0).iter().map(|v| v.norm()).collect();
    let mag = Array2::from_shape_vec((1, row.len()), row).unwrap();
    let cfg = CfarConfig {
        guard: 16,
        train: 32,
        pfa: 1e-6,
        floor_db: Some(20.0),
        split_db: Some(1.0),
        merge_gap_px: 0,
        grow_db: None,
        min_size_px: 1.0,
    };
    cfar_clusters(&mag, &cfg).len()
}

fn range_resolution() -> Outcome {
    let (far, near) = (cfar_count(0.25), cfar_count(0.05));
    outcome(far == 2 && near == 1, format!("0.25 m -> {far} detections, 0.05 m -> {near}"))
}

fn backprojection() -> Outcome {
    let w = RadarWaveform::default();
    let pose = Pose::new(Vec3::new(0.0, 0.0, 5.0), 0.0);
    let n = 128;
    let array = RadarArray::planar(pose, n, 1, w.wavelength() / 2.0);
    let surface = 1.0;
    let half_range = w.range_resolution() / 2.0;
    let mut r = rng::stream(2024, &[1]);
    let (mut worst_r, mut worst_a, mut worst_gain) = (0.0f64, 0.0f64, 0.0f64);
    let mut pass = true;
    for _ in 0..50 {
        let range: f64 = r.gen_range(15.0..55.0);
        let az: f64 = r.gen_range(-0.6..0.6);
        // Fine grid centred on the target, which sits on the centre pixel.
        let (nr, na) = (41, 41);
        let ranges = Axis::new(range - 20.0 * 0.01, 0.01, nr);
        let angles = Axis::new(az - 20.0 * 0.001, 0.001, na);
        let grid = PixelGrid::new(ranges, angles, pose, surface).unwrap();
        let target = PointTarget::new(grid.world_point(20, 20).unwrap(), 1.0);
        let f = synthesize_rx(&[target], &w, &array, 0, FS, 0.0, 0).unwrap();
        let p = range_compress(&f, &w).unwrap();
        let img = backproject(&p, &array, &w, &grid, 0).unwrap();
        let (pr, pc, _) = img.peak();
        let (er, ea) = grid.polar_at(pr as f64, pc as f64);
        let dr = (er - range).abs();
        // Azimuth cell of the array in sine space, seen at this azimuth.
        let half_az = 1.0 / n as f64 / az.cos();
        let da = (ea - az).abs();
        let expected: f64 = array
            .channels()
            .map(|c| w.compression_gain() * scattering_amplitude(&target, &c, &array, &w, 0).unwrap().norm())
            .sum();
        let gain_err = (img.pixels[[20, 20]].norm() / expected - 1.0).abs();
        worst_r = worst_r.max(dr / half_range);
        worst_a = worst_a.max(da / half_az);
        worst_gain = worst_gain.max(gain_err);
        pass &= dr <= half_range && da <= half_az && gain_err < 0.01;
    }
    outcome(
        pass,
        format!(
            "worst range error {worst_r:.3} and azimuth error {worst_a:.3} half-cells, worst peak gain error {:.3}%",
            100.0 * worst_gain
        ),
    )
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-12)
}

fn loss_oracles() -> Outcome {
    let mut fails = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            fails.push(name.to_string());
        }
    };
    let unit = BoundingBox::new(0.5, 0.5, 1.0, 1.0);
    check("iou identical", iou(&unit, &unit) == 1.0);
    check("iou disjoint", iou(&unit, &BoundingBox::new(3.0, 3.0, 1.0, 1.0)) == 0.0);
    check("iou half offset", close(iou(&unit, &BoundingBox::new(1.0, 0.5, 1.0, 1.0)), 1.0 / 3.0));

    check("bce perfect", close(bce_loss(1.0, 1.0, 1.0), 0.0));
    check("bce half", close(bce_loss(0.5, 1.0, 1.0), 2f64.ln()));
    check("bce negative", close(bce_loss(0.9, 0.0, 2.0), -2.0 * 0.1f64.ln()));

    check("dfl boundary", close(dfl_loss(1.0, 1.0, 2.0, 1.0, 0.3).unwrap(), 0.0));
    check("dfl midpoint", close(dfl_loss(1.5, 1.0, 2.0, 0.5, 0.5).unwrap(), 2f64.ln()));
    check("dfl degenerate", dfl_loss(1.0, 1.0, 1.0, 0.5, 0.5).is_err());
    // Minimizer on the simplex p_i + p_ip1 = 1 by golden-section search.
    for y in [0.1, 0.37, 0.5, 0.83] {
        let f = |p: f64| dfl_loss(y, 0.0, 1.0, p, 1.0 - p).unwrap();
        let (mut a, mut b) = (1e-9, 1.0 - 1e-9);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let (c, d) = (b - g * (b - a), a + g * (b - a));
            if f(c) < f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        check("dfl minimizer", ((a + b) / 2.0 - (1.0 - y)).abs() < 1e-6);
    }

    check("tal ones", close(tal_score(1.0, 1.0, 1.0, 1.0), 1.0));
    check("tal zero iou", close(tal_score(0.7, 0.0, 1.0, 1.0), 0.0));
    check("tal analytic", close(tal_score(0.8, 0.5, 1.0, 2.0), 0.2));

    check("ciou identical", close(ciou_loss(&unit, &unit), 0.0));
    let wide = BoundingBox::new(0.5, 0.5, 0.4, 0.2);
    let tall = BoundingBox::new(0.5, 0.5, 0.2, 0.4);
    let v = 4.0 / std::f64::consts::PI.powi(2) * (2f64.atan() - 0.5f64.atan()).powi(2);
    let i = 1.0 / 3.0;
    let alpha = v / ((1.0 - i) + v);
    check("ciou transposed iou", close(iou(&wide, &tall), i));
    check("ciou transposed", close(ciou_loss(&wide, &tall), 1.0 - i + alpha * v));
    let far = BoundingBox::new(100.5, 0.5, 1.0, 1.0);
    let l = ciou_loss(&far, &unit);
    check("ciou far bound", l > 1.0 && l < 2.0);

    // Gradients against central differences.
    let h = 1e-5;
    for (x, y, w) in [(0.3, 1.0, 1.0), (0.7, 0.0, 2.0), (0.05, 1.0, 0.5), (0.95, 0.0, 1.0)] {
        let fd = (bce_loss(x + h, y, w) - bce_loss(x - h, y, w)) / (2.0 * h);
        check("bce gradient", rel_close(bce_grad(x, y, w), fd, 1e-4));
    }
    let mut r = rng::stream(3, &[3]);
    for _ in 0..200 {
        let gt = BoundingBox::new(r.gen_range(0.2..0.8), r.gen_range(0.2..0.8), r.gen_range(0.05..0.3), r.gen_range(0.05..0.3));
        let b = [r.gen_range(0.1..0.9), r.gen_range(0.1..0.9), r.gen_range(0.05..0.4), r.gen_range(0.05..0.4)];
        let g = ciou_grad(&BoundingBox::new(b[0], b[1], b[2], b[3]), &gt);
        for k in 0..4 {
            let (mut p, mut m) = (b, b);
            p[k] += h;
            m[k] -= h;
            let fd = (ciou_loss(&BoundingBox::new(p[0], p[1], p[2], p[3]), &gt)
                - ciou_loss(&BoundingBox::new(m[0], m[1], m[2], m[3]), &gt))
                / (2.0 * h);
            // Kinks where box edges cross are skipped: the two one-sided
            // slopes disagree there.
            let fwd = (ciou_loss(&BoundingBox::new(p[0], p[1], p[2], p[3]), &gt)
                - ciou_loss(&BoundingBox::new(b[0], b[1], b[2], b[3]), &gt))
                / h;
            if !rel_close(fwd, fd, 1e-3) {
                continue;
            }
            check("ciou gradient", (g[k] - fd).abs() <= 1e-4 * g[k].abs().max(fd.abs()).max(1e-3));
        }
    }
    fails.dedup();
    outcome(fails.is_empty(), if fails.is_empty() { "all analytic cases and gradient checks hold".into() } else { format!("failed: {fails:?}") })
}

fn hungarian() -> Outcome {
    let mut r = rng::stream(4, &[4]);
    let mut bad = 0;
    for t in 0..1000 {
        let rows = r.gen_range(1..=6);
        let cols = r.gen_range(1..=6);
        // Integer costs keep every sum exact, half the time with ties.
        let hi = if t % 2 == 0 { 100 } else { 4 };
        let c: Vec<f64> = (0..rows * cols).map(|_| r.gen_range(0..hi) as f64).collect();
        let a = solve_lexicographic(&c, rows, cols);
        let brute = brute_force_min(&c, rows, cols);
        // Padding oracle: a square matrix with zero-cost dummy rows or columns.
        let n = rows.max(cols);
        let mut padded = vec![0.0; n * n];
        for i in 0..rows {
            for j in 0..cols {
                padded[i * n + j] = c[i * cols + j];
            }
        }
        let sq = brute_force_min(&padded, n, n);
        let sum: f64 = a.pairs.iter().map(|&(i, j)| c[i * cols + j]).sum();
        if a.total_cost != brute || sum != brute || sq != brute || a.pairs.len() != rows.min(cols) {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("{bad} of 1000 matrices differ from the exhaustive optimum"))
}

fn map_oracle() -> Outcome {
    let gt = |x: f64| vec![EvalGroundTruth { bbox: BoundingBox::new(x, 0.5, 0.1, 0.1), class: 0 }];
    let det = |x: f64, c: f64| EvalDetection { bbox: BoundingBox::new(x, 0.5, 0.1, 0.1), class: 0, confidence: c };
    // Ranked TP, TP, FP, TP, FP over five ground-truth boxes, one missed.
    let gts: Vec<_> = [0.2, 0.3, 0.4, 0.5, 0.6].into_iter().map(gt).collect();
    let dets = vec![vec![det(0.2, 0.9)], vec![det(0.3, 0.8)], vec![det(0.9, 0.7)], vec![det(0.5, 0.6)], vec![det(0.05, 0.5)]];
    let r = evaluate_map(&dets, &gts, 1, &MatchConfig::default());
    // Interpolated precision is 1 up to recall 0.4, 0.75 up to 0.6, then 0.
    let want = (41.0 + 20.0 * 0.75) / AP_POINTS as f64;
    let perfect = evaluate_map(&gts.iter().map(|g| vec![det(g[0].bbox.x, 1.0)]).collect::<Vec<_>>(), &gts, 1, &MatchConfig::default());
    let all_one = [perfect.precision, perfect.recall, perfect.f1, perfect.map50, perfect.map50_95].iter().all(|&v| v == 1.0);
    outcome(
        (r.map50 - want).abs() < 1e-6 && all_one,
        format!("AP50 {:.9} (expected {want:.9}), perfect detections all-ones: {all_one}", r.map50),
    )
}

/// `(points, array size) -> curve over the independent variable`.
fn series(points: &[CurvePoint], n: usize) -> Vec<&CurvePoint> {
    points.iter().filter(|p| p.array_size == n).collect()
}

fn se_diff(a: &CurvePoint, b: &CurvePoint) -> f64 {
    (a.stderr.powi(2) + b.stderr.powi(2)).sqrt()
}

fn association_trends() -> Outcome {
    let mut cfg = ExperimentConfig::default();
    cfg.experiment.trials = 200;
    let exp = Experiment::new(cfg).unwrap();
    let mut notes = Vec::new();
    let mut pass = true;

    let snr = exp.sweep_snr();
    for &n in &exp.cfg.comm.array_sizes {
        let s = series(&snr, n);
        let line: Vec<String> = s.iter().map(|p| format!("{:.3}", p.p_correct)).collect();
        println!("  snr sweep {n}x{n}: {}", line.join(" "));
        for w in s.windows(2) {
            if w[1].p_correct < w[0].p_correct - 2.0 * se_diff(w[0], w[1]) {
                pass = false;
                notes.push(format!("{n}x{n} drops at {} dB", w[1].snr_db));
            }
        }
    }
    // Plateau on the largest array: the top of the grid sits within the
    // noise of the estimate from the noiseless limit.
    let big = *exp.cfg.comm.array_sizes.iter().max().unwrap();
    let s = series(&snr, big);
    let (a, b) = (s[s.len() - 2], s[s.len() - 1]);
    let sc = &exp.cfg.scenario;
    let limit = exp.curve(sc.n_ve, sc.n_clutter, &[big], &[f64::INFINITY]).remove(0);
    let plateau = (limit.p_correct - b.p_correct).abs() <= 2.0 * se_diff(&limit, b);
    notes.push(format!(
        "{big}x{big} at {} dB {:.3}, noiseless {:.3}, 2se {:.3} (last step {:+.3})",
        b.snr_db,
        b.p_correct,
        limit.p_correct,
        2.0 * se_diff(&limit, b),
        b.p_correct - a.p_correct
    ));
    pass &= plateau;

    let clutter = exp.sweep_clutter();
    for &n in &exp.cfg.comm.array_sizes {
        let line: Vec<String> = series(&clutter, n).iter().map(|p| format!("{:.3}", p.p_correct)).collect();
        println!("  clutter sweep {n}x{n}: {}", line.join(" "));
    }
    let at = |n: usize| clutter.iter().find(|p| p.array_size == n && p.n_clutter == 5).unwrap().p_correct;
    let small = *exp.cfg.comm.array_sizes.iter().min().unwrap();
    let gap = at(big) - at(small);
    notes.push(format!("gap at -20 dB, 5 clutter {gap:.3}"));
    pass &= gap >= 0.2;

    let matrix = exp.sweep_matrix();
    for &v in &exp.cfg.experiment.matrix_n_ve {
        let row: Vec<&CurvePoint> = matrix.iter().filter(|p| p.n_ve == v).collect();
        let line: Vec<String> = row.iter().map(|p| format!("{:.3}", p.p_correct)).collect();
        println!("  matrix n_ve={v}: {}", line.join(" "));
        let first = row.iter().find(|p| p.n_clutter == 0).unwrap();
        for p in &row {
            if p.p_correct > first.p_correct + 2.0 * se_diff(first, p) {
                pass = false;
                notes.push(format!("matrix row {v} column {} exceeds the clutter-free column", p.n_clutter));
            }
        }
    }
    outcome(pass, notes.join("; "))
}

fn small_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.experiment.seed = 11;
    cfg.experiment.trials = 3;
    cfg.scenario.frames = 2;
    cfg.comm.array_sizes = vec![2, 8];
    cfg.comm.snr_db = vec![-30.0, -10.0];
    cfg.experiment.clutter_counts = vec![0, 2];
    cfg.experiment.matrix_n_ve = vec![1, 2];
    cfg.experiment.matrix_clutter = vec![0, 1];
    cfg.radar.range_bins = 96;
    cfg.radar.angle_bins = 32;
    cfg.radar.n_az = 32;
    cfg
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let root = tempfile::tempdir().unwrap();
    let mut bad = Vec::new();
    for cmd in Command::ALL {
        let mut outputs = Vec::new();
        for (run_id, threads) in [1, 3, 1].into_iter().enumerate() {
            let dir = root.path().join(format!("{cmd:?}-{run_id}"));
            let opts = RunOptions { threads, dump_images: true };
            if let Err(e) = run(cmd, small_config(), &dir, opts) {
                bad.push(format!("{cmd:?} failed: {e}"));
                break;
            }
            outputs.push(read_dir_sorted(&dir));
        }
        if outputs.len() == 3 && (outputs[0] != outputs[1] || outputs[0] != outputs[2] || outputs[0].is_empty()) {
            bad.push(format!("{cmd:?} differs"));
        }
    }
    outcome(bad.is_empty(), if bad.is_empty() { "7 subcommands byte-identical at 1 and 3 threads".into() } else { bad.join("; ") })
}

fn topk() -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for seed in [5, 6] {
        let mut cfg = ExperimentConfig::default();
        cfg.experiment.seed = seed;
        cfg.experiment.trials = 10;
        let exp = Experiment::new(cfg).unwrap();
        let trials = exp.trials(exp.cfg.scenario.n_ve, exp.cfg.scenario.n_clutter);
        let frames: Vec<_> = trials.iter().flat_map(|t| t.frames.iter().map(move |f| (t.seed, f))).collect();
        for &n in &[2, 8, 32] {
            let samples = beam_samples(&exp, &frames, n).unwrap();
            let acc: Vec<f64> = (1..=5).map(|k| topk_beam_accuracy(&samples, k)).collect();
            pass &= acc.windows(2).all(|w| w[0] <= w[1]) && !samples.is_empty();
            notes.push(format!("seed {seed} {n}x{n}: {}", acc.iter().map(|a| format!("{a:.2}")).collect::<Vec<_>>().join("<=")));
        }
    }
    // Null model: i.i.d. uniform logits over 16 beams.
    let mut r = rng::stream(8, &[8]);
    let n = 16;
    let m = 10_000;
    let samples: Vec<BeamSample> = (0..m)
        .map(|_| BeamSample {
            logits_h: (0..n).map(|_| r.gen::<f64>()).collect(),
            logits_v: (0..n).map(|_| r.gen::<f64>()).collect(),
            true_h: r.gen_range(0..n),
            true_v: r.gen_range(0..n),
        })
        .collect();
    for k in 1..=5 {
        let p = k as f64 / n as f64;
        let sigma = (p * (1.0 - p) / (2.0 * m as f64)).sqrt();
        let a = topk_beam_accuracy(&samples, k);
        if (a - p).abs() > 3.0 * sigma {
            pass = false;
            notes.push(format!("null top-{k} {a:.4} vs {p:.4}"));
        }
    }
    notes.push("uniform-logit null within 3 sigma".into());
    outcome(pass, notes.join("; "))
}

//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use foliage::runner::{self, CdfResult, Cell, Metric, SweepResult};
use foliage::{emit_outputs, ExperimentConfig};
use foliage_core::geometry::{intersect_all, rodrigues, Bvh, Ray};
use foliage_core::{
    assemble_cir_on, fspl_db, generate_foliage, rms_delay_spread, Complex64, CrownParams, DelayGrid,
    PathContribution, Pdp, Triangle, Vec3,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// criterion 1
const RAY_COUNT: usize = 1000;
const FACE_COUNT: usize = 500;
const HIT_T_TOL: f64 = 1e-7;
const BVH_TIME_LIMIT: Duration = Duration::from_secs(5);
// criterion 2
const ROTATION_COUNT: usize = 10_000;
const ROTATION_TOL: f64 = 1e-9;
const AREA_REL_TOL: f64 = 1e-9;
// criterion 3
const ENVELOPE_COUNT: u64 = 100;
const VOLUME_TOL_M3: f64 = 1e-3;
// criterion 5
const FSPL_60_TARGET: f64 = 97.5;
const FSPL_60_TOL: f64 = 0.01;
const FSPL_80_TARGET: f64 = 100.0;
const FSPL_80_TOL: f64 = 0.1;
// criterion 6
const CALIBRATION_TARGET_DB: f64 = -140.0;
const CALIBRATION_FIT_TOL_DB: f64 = 0.1;
const BAND_OFFSET_RANGE_DB: (f64, f64) = (3.0, 4.0);
const BAND_OFFSET_TOL_DB: f64 = 1.5;
// criterion 7
const PL_90_WINDOW_DB: (f64, f64) = (-134.0, -126.0);
const MIN_SPEARMAN: f64 = 0.8;
// criterion 8
const EXCESS_0_WINDOW_DB: (f64, f64) = (35.0, 45.0);
const EXCESS_180_WINDOW_DB: (f64, f64) = (15.0, 25.0);
const LINK_DISTANCE_M: f64 = 30.0;
// criterion 9
const DS_RANGE_NS: (f64, f64) = (3.0, 18.0);
const DS_BULK_NS: (f64, f64) = (5.0, 15.0);
const DS_STD_RANGE_NS: (f64, f64) = (1.0, 5.0);
// criterion 10
const DS_CLOSED_FORM_TOL_NS: f64 = 1e-4;
const THREE_TAP_SPEC_NS: f64 = 3.4908;
// criterion 11
const ENERGY_SETS: usize = 100;
const ENERGY_REL_TOL: f64 = 0.01;
// criterion 12
const CDF_MEDIAN_60_DBM: f64 = -77.0;
const CDF_MEDIAN_80_DBM: f64 = -80.0;
const CDF_MEDIAN_TOL_DB: f64 = 3.0;
const CDF_DENSITY: f64 = 0.25;
// criterion 13
const SINGLE_TRACE_LIMIT: Duration = Duration::from_secs(1);
const SWEEP_LIMIT: Duration = Duration::from_secs(300);
const EXPECTED_CELLS: usize = 520;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(x: f64, (lo, hi): (f64, f64)) -> bool {
    x >= lo && x <= hi
}

/// Ranks with ties averaged.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// Linear-interpolated percentile of sorted data.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let pos = p / 100.0 * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn random_point(rng: &mut ChaCha8Rng, s: f64) -> Vec3 {
    Vec3::new(rng.random_range(-s..s), rng.random_range(-s..s), rng.random_range(-s..s))
}

fn geometry_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut faces = Vec::with_capacity(FACE_COUNT);
    while faces.len() < FACE_COUNT {
        let c = random_point(&mut rng, 10.0);
        let (a, b, d) = (random_point(&mut rng, 1.5), random_point(&mut rng, 1.5), random_point(&mut rng, 1.5));
        if let Ok(t) = Triangle::new(c + a, c + b, c + d) {
            faces.push(t);
        }
    }
    let rays: Vec<Ray> = (0..RAY_COUNT)
        .map(|_| {
            let o = random_point(&mut rng, 15.0);
            let target = random_point(&mut rng, 8.0);
            Ray::new(o, target - o).unwrap()
        })
        .collect();
    let start = Instant::now();
    let bvh = Bvh::build(&faces).unwrap();
    let fast: Vec<_> = rays.iter().map(|r| bvh.intersect(r)).collect();
    let elapsed = start.elapsed();
    let slow: Vec<_> = rays.iter().map(|r| intersect_all(&faces, r)).collect();
    let (mut mismatched, mut max_dt, mut hits) = (0, 0.0f64, 0);
    for (f, s) in fast.iter().zip(&slow) {
        hits += s.len();
        let same = f.len() == s.len() && f.iter().zip(s).all(|(a, b)| a.face == b.face);
        if !same {
            mismatched += 1;
            continue;
        }
        for (a, b) in f.iter().zip(s) {
            max_dt = max_dt.max((a.hit.t - b.hit.t).abs());
        }
    }
    outcome(
        mismatched == 0 && max_dt <= HIT_T_TOL && elapsed < BVH_TIME_LIMIT,
        format!(
            "{RAY_COUNT} rays x {FACE_COUNT} faces: {hits} hits, {mismatched} rays with differing hit sets, \
             max |dt| = {max_dt:.1e}, BVH build+query {:.3} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn rotation_and_area() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut max_orth, mut max_det) = (0.0f64, 0.0f64);
    for _ in 0..ROTATION_COUNT {
        let axis = loop {
            if let Some(a) = random_point(&mut rng, 1.0).try_normalize() {
                break a;
            }
        };
        let angle = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let r = rodrigues(axis, angle).unwrap();
        max_orth = max_orth.max(r.orthonormality_error());
        max_det = max_det.max((r.determinant() - 1.0).abs());
    }
    let mut max_area = 0.0f64;
    let mut faces = 0;
    for seed in 0..10 {
        let model = generate_foliage(&CrownParams::default().with_seed(seed), Vec3::ZERO).unwrap();
        let a = model.params.triangle_area_m2;
        for t in &model.scatterers {
            max_area = max_area.max((t.area() - a).abs() / a);
            faces += 1;
        }
    }
    outcome(
        max_orth <= ROTATION_TOL && max_det <= ROTATION_TOL && max_area <= AREA_REL_TOL,
        format!(
            "{ROTATION_COUNT} rotations: max |RtR - I| = {max_orth:.1e}, max |det - 1| = {max_det:.1e}; \
             {faces} scatterers: max relative area error {max_area:.1e}"
        ),
    )
}

fn volume_control() -> Outcome {
    let params = CrownParams::default();
    let mut worst = 0.0f64;
    let mut failures = 0;
    for seed in 0..ENVELOPE_COUNT {
        match generate_foliage(&params.with_seed(seed), Vec3::ZERO) {
            Ok(m) => worst = worst.max((m.achieved_volume - params.target_volume_m3).abs()),
            Err(_) => failures += 1,
        }
    }
    outcome(
        failures == 0 && worst <= VOLUME_TOL_M3,
        format!(
            "{ENVELOPE_COUNT} envelopes (xi = 0.1, V_D = 600 m^3): {failures} generation failures, \
             max |V - V_D| = {worst:.1e} m^3"
        ),
    )
}

fn scatterer_counts() -> Outcome {
    let count = |rho: f64| {
        let p = CrownParams {
            triangle_density_per_m3: rho,
            ..CrownParams::default()
        };
        generate_foliage(&p, Vec3::ZERO).unwrap().scatterers.len()
    };
    let (dense, sparse) = (count(0.25), count(0.05));
    outcome(dense == 150 && sparse == 30, format!("rho = 0.25 -> {dense} faces, rho = 0.05 -> {sparse} faces"))
}

fn fspl_anchors() -> Outcome {
    let (f60, f80) = (fspl_db(LINK_DISTANCE_M, 60e9), fspl_db(LINK_DISTANCE_M, 80e9));
    outcome(
        (f60 - FSPL_60_TARGET).abs() <= FSPL_60_TOL && (f80 - FSPL_80_TARGET).abs() <= FSPL_80_TOL,
        format!(
            "fspl(30 m, 60 GHz) = {f60:.4} dB (want {FSPL_60_TARGET} +/- {FSPL_60_TOL}), \
             fspl(30 m, 80 GHz) = {f80:.4} dB (want {FSPL_80_TARGET} +/- {FSPL_80_TOL})"
        ),
    )
}

fn mean_pl(sweep: &SweepResult, f: f64, alpha: f64) -> f64 {
    sweep.summary(Metric::PathLoss, f, alpha).map_or(f64::NAN, |s| s.mean)
}

fn calibrated_level(sweep: &SweepResult) -> Outcome {
    let at60 = mean_pl(sweep, 60e9, 0.0);
    let at80 = mean_pl(sweep, 80e9, 0.0);
    let offset = at60 - at80;
    let window = (BAND_OFFSET_RANGE_DB.0 - BAND_OFFSET_TOL_DB, BAND_OFFSET_RANGE_DB.1 + BAND_OFFSET_TOL_DB);
    outcome(
        (at60 - CALIBRATION_TARGET_DB).abs() <= CALIBRATION_FIT_TOL_DB && within(offset, window),
        format!(
            "alpha = 0: 60 GHz mean PL {at60:.3} dB after calibration, 80 GHz {at80:.3} dB, \
             offset {offset:.2} dB (want [{:.1}, {:.1}])",
            window.0, window.1
        ),
    )
}

fn angular_trend(sweep: &SweepResult, cfg: &ExperimentConfig) -> Outcome {
    let pl90 = mean_pl(sweep, 60e9, 90.0);
    let mut rhos = Vec::new();
    for &f in &cfg.frequencies_hz {
        let means: Vec<f64> = cfg.alpha_grid_deg.iter().map(|&a| mean_pl(sweep, f, a)).collect();
        rhos.push(spearman(&cfg.alpha_grid_deg, &means));
    }
    let window_ok = within(pl90, PL_90_WINDOW_DB);
    let trend_ok = rhos.iter().all(|&r| r >= MIN_SPEARMAN);
    outcome(
        window_ok && trend_ok,
        format!(
            "mean PL at 90 deg, 60 GHz = {pl90:.2} dB (want [{}, {}]) {}; Spearman(alpha, mean PL) = {} {}",
            PL_90_WINDOW_DB.0,
            PL_90_WINDOW_DB.1,
            if window_ok { "ok" } else { "out of window" },
            rhos.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join(" / "),
            if trend_ok { "ok" } else { "below 0.8" }
        ),
    )
}

fn excess_attenuation(sweep: &SweepResult, cfg: &ExperimentConfig) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for &f in &cfg.frequencies_hz {
        let fspl = fspl_db(LINK_DISTANCE_M, f);
        let e0 = -mean_pl(sweep, f, 0.0) - fspl;
        let e180 = -mean_pl(sweep, f, 180.0) - fspl;
        ok &= within(e0, EXCESS_0_WINDOW_DB) && within(e180, EXCESS_180_WINDOW_DB);
        parts.push(format!("{} GHz: {e0:.2} dB at 0 deg, {e180:.2} dB at 180 deg", f / 1e9));
    }
    outcome(
        ok,
        format!(
            "{} (want [{}, {}] and [{}, {}])",
            parts.join("; "),
            EXCESS_0_WINDOW_DB.0,
            EXCESS_0_WINDOW_DB.1,
            EXCESS_180_WINDOW_DB.0,
            EXCESS_180_WINDOW_DB.1
        ),
    )
}

fn delay_spread(sweep: &SweepResult, cfg: &ExperimentConfig) -> Outcome {
    let mut all: Vec<f64> = sweep
        .records
        .iter()
        .map(|r| r.ds_s * 1e9)
        .filter(|v| v.is_finite())
        .collect();
    all.sort_by(f64::total_cmp);
    let (min, max) = (all[0], all[all.len() - 1]);
    let (p10, p90) = (percentile(&all, 10.0), percentile(&all, 90.0));
    let range_ok = within(min, DS_RANGE_NS) && within(max, DS_RANGE_NS);
    let bulk_ok = within(p10, DS_BULK_NS) && within(p90, DS_BULK_NS);

    let mut rhos = Vec::new();
    let (mut std_lo, mut std_hi) = (f64::INFINITY, 0.0f64);
    let mut std_out = 0;
    for &f in &cfg.frequencies_hz {
        let mut means = Vec::new();
        for &a in &cfg.alpha_grid_deg {
            let s = sweep.summary(Metric::DelaySpread, f, a).unwrap();
            means.push(s.mean);
            std_lo = std_lo.min(s.std_dev);
            std_hi = std_hi.max(s.std_dev);
            if !within(s.std_dev, DS_STD_RANGE_NS) {
                std_out += 1;
            }
        }
        rhos.push(spearman(&cfg.alpha_grid_deg, &means));
    }
    let trend_ok = rhos.iter().all(|&r| r >= MIN_SPEARMAN);
    let cells = cfg.frequencies_hz.len() * cfg.alpha_grid_deg.len();
    outcome(
        range_ok && bulk_ok && trend_ok && std_out == 0,
        format!(
            "DS over {} cells in [{min:.2}, {max:.2}] ns (want within [{}, {}]); p10-p90 = [{p10:.2}, {p90:.2}] ns \
             (want within [{}, {}]); Spearman(alpha, mean DS) = {}; per-angle std in [{std_lo:.2}, {std_hi:.2}] ns, \
             {std_out}/{cells} outside [{}, {}]",
            all.len(),
            DS_RANGE_NS.0,
            DS_RANGE_NS.1,
            DS_BULK_NS.0,
            DS_BULK_NS.1,
            rhos.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join(" / "),
            DS_STD_RANGE_NS.0,
            DS_STD_RANGE_NS.1
        ),
    )
}

/// Direct evaluation of sqrt(Σ P (τ − τ̄)² / Σ P) on (delay ns, power) pairs.
fn brute_force_ds_ns(taps: &[(f64, f64)]) -> f64 {
    let total: f64 = taps.iter().map(|t| t.1).sum();
    let mean = taps.iter().map(|&(tau, p)| tau * p).sum::<f64>() / total;
    (taps.iter().map(|&(tau, p)| p * (tau - mean).powi(2)).sum::<f64>() / total).sqrt()
}

/// PDP on a 1 ns grid holding `taps` at integer nanosecond delays.
fn pdp_of(taps: &[(f64, f64)]) -> Pdp {
    let len = taps.iter().map(|t| t.0 as usize).max().unwrap() + 1;
    let mut power = vec![0.0; len.max(2)];
    for &(tau, p) in taps {
        power[tau as usize] += p;
    }
    Pdp {
        grid: DelayGrid::new(0.0, 1e-9, power.len()).unwrap(),
        power,
    }
}

fn metric_closed_forms() -> Outcome {
    let ds = |taps: &[(f64, f64)]| rms_delay_spread(&pdp_of(taps)).unwrap() * 1e9;
    let single = ds(&[(7.0, 0.3)]);
    let pair = ds(&[(0.0, 1.0), (10.0, 1.0)]);
    let three_taps = [(0.0, 1.0), (4.0, 0.5), (10.0, 0.25)];
    let three = ds(&three_taps);
    let oracle = brute_force_ds_ns(&three_taps);
    outcome(
        single == 0.0 && pair == 5.0 && (three - oracle).abs() <= DS_CLOSED_FORM_TOL_NS,
        format!(
            "single tap {single} ns; equal taps at 0/10 ns {pair} ns; three taps {three:.6} ns vs brute force \
             {oracle:.6} ns (the 3.4908 ns figure quoted for this case is off by {:.4} ns)",
            oracle - THREE_TAP_SPEC_NS
        ),
    )
}

fn energy_conservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let step = 0.5e-9;
    let mut worst = 0.0f64;
    for _ in 0..ENERGY_SETS {
        // distinct tap slots sharing one fractional offset, inside the grid interior
        let n = rng.random_range(1..40);
        let frac: f64 = rng.random_range(0.0..1.0);
        let mut slots: Vec<usize> = (100..900).collect();
        for i in 0..n {
            let j = rng.random_range(i..slots.len());
            slots.swap(i, j);
        }
        let paths: Vec<PathContribution> = slots[..n]
            .iter()
            .map(|&k| PathContribution {
                delay_s: (k as f64 + frac) * step,
                amplitude: Complex64::from_polar(rng.random_range(1e-3..1.0), rng.random_range(0.0..6.3)),
                face_index: Some(k),
                occlusions_in: 0,
                occlusions_out: 0,
            })
            .collect();
        let cir = assemble_cir_on(&paths, DelayGrid::new(0.0, step, 1024).unwrap(), 60e9).unwrap();
        let input: f64 = paths.iter().map(|p| p.power()).sum();
        worst = worst.max((cir.energy() - input).abs() / input);
    }
    outcome(
        worst <= ENERGY_REL_TOL,
        format!("{ENERGY_SETS} path sets: max relative energy error {:.3}%", worst * 100.0),
    )
}

fn cdf_sanity(cdf: &[CdfResult], cfg: &ExperimentConfig) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for res in cdf {
        let target = if res.frequency_hz == 60e9 { CDF_MEDIAN_60_DBM } else { CDF_MEDIAN_80_DBM };
        for curve in &res.curves {
            let median = curve.cdf().map_or(f64::NAN, |c| c.median());
            if curve.density_per_m3 == CDF_DENSITY {
                ok &= (median - target).abs() <= CDF_MEDIAN_TOL_DB;
                parts.push(format!(
                    "{} GHz median {median:.2} dBm (want {target} +/- {CDF_MEDIAN_TOL_DB})",
                    res.frequency_hz / 1e9
                ));
            } else {
                parts.push(format!("[rho = {}: {median:.2} dBm]", curve.density_per_m3));
            }
        }
    }
    outcome(
        ok,
        format!(
            "taps above {} dBm at {} deg, rho = {CDF_DENSITY}: {}",
            cfg.cdf.noise_floor_dbm,
            cfg.cdf.alpha_deg,
            parts.join(", ")
        ),
    )
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect()
}

fn determinism_and_speed(cfg: &ExperimentConfig, sweep: &SweepResult, sweep_time: Duration) -> Outcome {
    // generate the crown, trace, assemble the CIR and compute PL/DS
    let start = Instant::now();
    let t = runner::trace_cell(
        cfg,
        Cell {
            frequency_hz: 60e9,
            alpha_deg: 0.0,
            realization: 0,
        },
    )
    .unwrap();
    let single = start.elapsed();
    assert!(!t.paths.is_empty());

    let mut snaps = Vec::new();
    let mut cells_ok = true;
    for threads in [1, 4] {
        let tmp = tempfile::tempdir().unwrap();
        let mut c = cfg.clone().with_output_dir(tmp.path());
        c.threads = Some(threads);
        let res = runner::run_sweep(&c).unwrap();
        cells_ok &= res.records == sweep.records;
        emit_outputs(&res, None, &c).unwrap();
        snaps.push(snapshot(tmp.path()));
    }
    let identical = cells_ok && snaps[0] == snaps[1];
    outcome(
        identical && sweep.records.len() == EXPECTED_CELLS && single < SINGLE_TRACE_LIMIT && sweep_time < SWEEP_LIMIT,
        format!(
            "outputs identical for 1 and 4 threads and the default pool: {identical} ({} files); \
             single realization {:.1} ms; {}-cell sweep {:.2} s",
            snaps[0].len(),
            single.as_secs_f64() * 1e3,
            sweep.records.len(),
            sweep_time.as_secs_f64()
        ),
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut report = |n: u32, name: &'static str, o: Outcome| {
        println!("criterion {n:>2} {} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((n, name, o));
    };

    report(1, "geometry oracles", geometry_oracles());
    report(2, "rotation and area invariants", rotation_and_area());
    report(3, "volume control", volume_control());
    report(4, "scatterer counts", scatterer_counts());
    report(5, "FSPL anchors", fspl_anchors());

    // one calibration at (0 deg, 60 GHz), then every sweep-level criterion without refit
    let mut cfg = ExperimentConfig::default();
    let cal = runner::calibrate_at(&cfg, CALIBRATION_TARGET_DB, 0.0, 60e9).unwrap();
    cfg.scatter.calibration_gain_db = cal.gain_db;
    let start = Instant::now();
    let sweep = runner::run_sweep(&cfg).unwrap();
    let sweep_time = start.elapsed();
    let cdf = runner::run_cdf(&cfg).unwrap();

    report(6, "calibrated absolute level", calibrated_level(&sweep));
    report(7, "angular PL trend", angular_trend(&sweep, &cfg));
    report(8, "excess tree attenuation", excess_attenuation(&sweep, &cfg));
    report(9, "DS range and trend", delay_spread(&sweep, &cfg));
    report(10, "metric closed forms", metric_closed_forms());
    report(11, "CIR energy conservation", energy_conservation());
    report(12, "CDF sanity", cdf_sanity(&cdf, &cfg));
    report(13, "determinism and performance", determinism_and_speed(&cfg, &sweep, sweep_time));

    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {} passed, {} failed (calibration gain {:.4} dB){}",
        results.len() - failed.len(),
        failed.len(),
        cal.gain_db,
        if failed.is_empty() {
            String::new()
        } else {
            format!("; failing: {failed:?}")
        }
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

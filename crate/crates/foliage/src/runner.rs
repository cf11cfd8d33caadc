//! Seeded sweeps over receiver angle, frequency and crown realization.
//!
//! Cells are independent: each one derives its crown seed from its own
//! (realization, angle) coordinates, so results do not depend on the thread
//! count or on which other cells are part of the run. Results are merged in
//! cell order.

use foliage_core::seed::cell_seed;
use foliage_core::{
    assemble_cir_on, channel_stats, empirical_cdf, generate_foliage, path_loss_db, scene_with_foliage,
    trace_paths, ChannelStats, Cir, CrownParams, DelayGrid, EmpiricalCdf, Error as CoreError, FoliageModel,
    PathContribution, Scene, SceneOptions, Vec3, SPEED_OF_LIGHT,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{FoliageError, Result};

/// Minimum realizations for a calibration fit.
pub const MIN_CALIBRATION_REALIZATIONS: usize = 5;

/// Coordinates of one sweep cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub frequency_hz: f64,
    pub alpha_deg: f64,
    pub realization: usize,
}

/// Result of one cell, one CSV row. A channel without any received power
/// has `pl_db = -inf` and NaN delays; a failed cell carries its error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub frequency_hz: f64,
    pub alpha_deg: f64,
    pub realization: usize,
    pub seed: u64,
    pub n_paths: usize,
    pub pl_db: f64,
    pub ds_s: f64,
    pub mean_delay_s: f64,
    pub error: Option<String>,
}

impl CellRecord {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

/// Everything produced while tracing one cell.
#[derive(Debug, Clone)]
pub struct TracedCell {
    pub seed: u64,
    pub scene: Scene,
    pub paths: Vec<PathContribution>,
    pub cir: Cir,
    pub stats: ChannelStats,
}

/// Cells in merge order: frequency, then angle, then realization.
pub fn sweep_cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let mut cells = Vec::with_capacity(cfg.frequencies_hz.len() * cfg.alpha_grid_deg.len() * cfg.n_realizations);
    for &frequency_hz in &cfg.frequencies_hz {
        for &alpha_deg in &cfg.alpha_grid_deg {
            for realization in 0..cfg.n_realizations {
                cells.push(Cell {
                    frequency_hz,
                    alpha_deg,
                    realization,
                });
            }
        }
    }
    cells
}

/// Crown parameters of realization `realization` at angle `alpha_deg`.
pub fn realization_params(crown: &CrownParams, realization: usize, alpha_deg: f64) -> CrownParams {
    crown.with_seed(cell_seed(crown.seed, realization as u64, alpha_deg))
}

pub fn realization_foliage(crown: &CrownParams, realization: usize, alpha_deg: f64) -> Result<FoliageModel> {
    Ok(generate_foliage(&realization_params(crown, realization, alpha_deg), Vec3::ZERO)?)
}

/// Delay grid shared by every realization of one scene layout: it starts
/// `lead_taps` before the direct TX→RX delay, which no single-bounce path
/// can undercut.
pub fn layout_grid(cfg: &ExperimentConfig, scene: &Scene) -> Result<DelayGrid> {
    let direct = scene.tx_rx_distance() / SPEED_OF_LIGHT;
    Ok(DelayGrid::anchored(
        direct,
        scene.bandwidth_hz,
        cfg.grid.len,
        cfg.grid.lead_taps,
    )?)
}

/// PL, DS and mean delay, with the empty channel mapped to `-inf`/NaN.
pub fn stats_or_empty(cir: &Cir) -> Result<ChannelStats> {
    match channel_stats(cir) {
        Ok(s) => Ok(s),
        Err(CoreError::ZeroPower) => Ok(ChannelStats {
            pl_db: path_loss_db(cir),
            ds_s: f64::NAN,
            mean_delay_s: f64::NAN,
        }),
        Err(e) => Err(e.into()),
    }
}

pub fn trace_with(
    cfg: &ExperimentConfig,
    crown: &CrownParams,
    options: &SceneOptions,
    cell: Cell,
) -> Result<TracedCell> {
    let params = realization_params(crown, cell.realization, cell.alpha_deg);
    let foliage = generate_foliage(&params, Vec3::ZERO)?;
    let scene = scene_with_foliage(foliage, cell.alpha_deg, cell.frequency_hz, options)?;
    let paths = trace_paths(&scene)?;
    let grid = layout_grid(cfg, &scene)?;
    let cir = assemble_cir_on(&paths, grid, cell.frequency_hz)?;
    let stats = stats_or_empty(&cir)?;
    Ok(TracedCell {
        seed: params.seed,
        scene,
        paths,
        cir,
        stats,
    })
}

/// Traces one cell with the sweep's crown and scene options.
pub fn trace_cell(cfg: &ExperimentConfig, cell: Cell) -> Result<TracedCell> {
    trace_with(cfg, &cfg.crown, &cfg.scene_options(), cell)
}

fn evaluate(cfg: &ExperimentConfig, options: &SceneOptions, cell: Cell) -> CellRecord {
    let seed = cell_seed(cfg.crown.seed, cell.realization as u64, cell.alpha_deg);
    let mut record = CellRecord {
        frequency_hz: cell.frequency_hz,
        alpha_deg: cell.alpha_deg,
        realization: cell.realization,
        seed,
        n_paths: 0,
        pl_db: f64::NAN,
        ds_s: f64::NAN,
        mean_delay_s: f64::NAN,
        error: None,
    };
    match trace_with(cfg, &cfg.crown, options, cell) {
        Ok(t) => {
            record.n_paths = t.paths.len();
            record.pl_db = t.stats.pl_db;
            record.ds_s = t.stats.ds_s;
            record.mean_delay_s = t.stats.mean_delay_s;
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    record
}

pub fn thread_pool(cfg: &ExperimentConfig) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| FoliageError::Config(format!("cannot start worker pool: {e}")))
}

/// Evaluates `cells` on the configured pool, returning records in input order.
pub fn evaluate_cells(cfg: &ExperimentConfig, cells: &[Cell]) -> Result<Vec<CellRecord>> {
    let options = cfg.scene_options();
    let pool = thread_pool(cfg)?;
    Ok(pool.install(|| cells.par_iter().map(|&c| evaluate(cfg, &options, c)).collect()))
}

/// Which per-cell metric a heatmap bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// Path loss in dB.
    PathLoss,
    /// RMS delay spread in ns.
    DelaySpread,
}

impl Metric {
    pub fn value(self, r: &CellRecord) -> f64 {
        match self {
            Metric::PathLoss => r.pl_db,
            Metric::DelaySpread => r.ds_s * 1e9,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::PathLoss => "pl_db",
            Metric::DelaySpread => "ds_ns",
        }
    }
}

/// Occurrence counts of one metric per angle for one frequency. Bins are
/// `[k·w, (k+1)·w)`; non-finite values (failed cells, empty channels) go to
/// a separate undefined bucket so each angle column sums to the number of
/// realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub metric: Metric,
    pub frequency_hz: f64,
    pub alphas_deg: Vec<f64>,
    pub bin_width: f64,
    /// Index `k` of the first bin.
    pub first_bin: i64,
    /// `counts[alpha][bin]`.
    pub counts: Vec<Vec<u32>>,
    pub undefined: Vec<u32>,
}

impl Heatmap {
    pub fn build(
        records: &[CellRecord],
        metric: Metric,
        frequency_hz: f64,
        alphas_deg: &[f64],
        bin_width: f64,
    ) -> Heatmap {
        let rows: Vec<&CellRecord> = records
            .iter()
            .filter(|r| r.frequency_hz == frequency_hz)
            .collect();
        let bin_of = |v: f64| (v / bin_width).floor() as i64;
        let finite = || rows.iter().map(|r| metric.value(r)).filter(|v| v.is_finite());
        let lo = finite().map(bin_of).min().unwrap_or(0);
        let hi = finite().map(bin_of).max().unwrap_or(-1);
        let nbins = (hi - lo + 1).max(0) as usize;
        let mut counts = vec![vec![0u32; nbins]; alphas_deg.len()];
        let mut undefined = vec![0u32; alphas_deg.len()];
        for r in rows {
            let Some(a) = alphas_deg.iter().position(|&a| a == r.alpha_deg) else {
                continue;
            };
            let v = metric.value(r);
            if v.is_finite() {
                counts[a][(bin_of(v) - lo) as usize] += 1;
            } else {
                undefined[a] += 1;
            }
        }
        Heatmap {
            metric,
            frequency_hz,
            alphas_deg: alphas_deg.to_vec(),
            bin_width,
            first_bin: lo,
            counts,
            undefined,
        }
    }

    pub fn bin_count(&self) -> usize {
        self.counts.first().map_or(0, Vec::len)
    }

    /// `[lower, upper)` edges of bin `i`.
    pub fn bin_edges(&self, i: usize) -> (f64, f64) {
        let k = self.first_bin + i as i64;
        (k as f64 * self.bin_width, (k + 1) as f64 * self.bin_width)
    }

    /// Occurrences at angle index `a`, undefined bucket included.
    pub fn column_total(&self, a: usize) -> u32 {
        self.counts[a].iter().sum::<u32>() + self.undefined[a]
    }

    pub fn total(&self) -> u32 {
        (0..self.alphas_deg.len()).map(|a| self.column_total(a)).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub records: Vec<CellRecord>,
    pub pl_heatmaps: Vec<Heatmap>,
    pub ds_heatmaps: Vec<Heatmap>,
}

impl SweepResult {
    pub fn from_records(cfg: &ExperimentConfig, records: Vec<CellRecord>) -> SweepResult {
        let build = |metric, width| {
            cfg.frequencies_hz
                .iter()
                .map(|&f| Heatmap::build(&records, metric, f, &cfg.alpha_grid_deg, width))
                .collect()
        };
        SweepResult {
            pl_heatmaps: build(Metric::PathLoss, cfg.heatmap.pl_bin_db),
            ds_heatmaps: build(Metric::DelaySpread, cfg.heatmap.ds_bin_ns),
            records,
        }
    }

    pub fn failed_cells(&self) -> usize {
        self.records.iter().filter(|r| r.failed()).count()
    }

    pub fn cell(&self, frequency_hz: f64, alpha_deg: f64) -> impl Iterator<Item = &CellRecord> + '_ {
        self.records
            .iter()
            .filter(move |r| r.frequency_hz == frequency_hz && r.alpha_deg == alpha_deg)
    }

    /// Mean and sample standard deviation of `metric` over the finite values
    /// at one (frequency, angle).
    pub fn summary(&self, metric: Metric, frequency_hz: f64, alpha_deg: f64) -> Option<Summary> {
        let values: Vec<f64> = self
            .cell(frequency_hz, alpha_deg)
            .map(|r| metric.value(r))
            .filter(|v| v.is_finite())
            .collect();
        Summary::of(&values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub std_dev: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std_dev = if values.len() > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(Summary {
            count: values.len(),
            mean,
            std_dev,
        })
    }
}

/// Runs every (frequency, angle, realization) cell. Cell failures are
/// recorded, not returned; the error path is for an unusable configuration.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let records = evaluate_cells(cfg, &sweep_cells(cfg))?;
    Ok(SweepResult::from_records(cfg, records))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    /// Gain to store in `scatter.calibration_gain_db`.
    pub gain_db: f64,
    /// Mean PL at the anchor with the config's current gain.
    pub mean_pl_db: f64,
    pub realizations: usize,
}

/// Fits the scattering gain so that the mean PL over realizations at
/// (`alpha_deg`, `frequency_hz`) equals `target_pl_db`. The gain scales every
/// path equally, so the dB mean shifts one for one and no iteration is needed.
pub fn calibrate_at(
    cfg: &ExperimentConfig,
    target_pl_db: f64,
    alpha_deg: f64,
    frequency_hz: f64,
) -> Result<Calibration> {
    cfg.validate()?;
    if cfg.n_realizations < MIN_CALIBRATION_REALIZATIONS {
        return Err(FoliageError::Calibration(format!(
            "needs at least {MIN_CALIBRATION_REALIZATIONS} realizations, config has {}",
            cfg.n_realizations
        )));
    }
    if !target_pl_db.is_finite() {
        return Err(FoliageError::Calibration("target PL must be finite".into()));
    }
    let cells: Vec<Cell> = (0..cfg.n_realizations)
        .map(|realization| Cell {
            frequency_hz,
            alpha_deg,
            realization,
        })
        .collect();
    let records = evaluate_cells(cfg, &cells)?;
    let mut pls = Vec::with_capacity(records.len());
    for r in &records {
        if let Some(e) = &r.error {
            return Err(FoliageError::Calibration(format!("realization {}: {e}", r.realization)));
        }
        if !r.pl_db.is_finite() {
            return Err(FoliageError::Calibration(format!(
                "no paths reach the receiver at alpha = {alpha_deg} deg, f = {frequency_hz} Hz (realization {})",
                r.realization
            )));
        }
        pls.push(r.pl_db);
    }
    let mean_pl_db = pls.iter().sum::<f64>() / pls.len() as f64;
    Ok(Calibration {
        gain_db: cfg.scatter.calibration_gain_db + target_pl_db - mean_pl_db,
        mean_pl_db,
        realizations: pls.len(),
    })
}

/// Calibrates at the config's anchor.
pub fn calibrate(cfg: &ExperimentConfig) -> Result<Calibration> {
    let a = cfg.calibration;
    calibrate_at(cfg, a.target_pl_db, a.alpha_deg, a.frequency_hz)
}

/// Received tap powers for one crown density.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfCurve {
    pub density_per_m3: f64,
    /// PDP tap powers (dBm) above the noise floor, pooled over realizations.
    pub values_dbm: Vec<f64>,
    pub failed: usize,
}

impl CdfCurve {
    pub fn cdf(&self) -> Option<EmpiricalCdf> {
        empirical_cdf(&self.values_dbm).ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdfResult {
    pub frequency_hz: f64,
    pub alpha_deg: f64,
    pub curves: Vec<CdfCurve>,
}

/// RSSI distribution at `cfg.cdf.alpha_deg`: for each frequency and crown
/// density, the instantaneous PDP of every realization (received with the
/// configured antenna gains) contributes its taps above the noise floor.
pub fn run_cdf(cfg: &ExperimentConfig) -> Result<Vec<CdfResult>> {
    cfg.validate()?;
    let options = cfg.rssi_scene_options();
    let pool = thread_pool(cfg)?;
    let alpha_deg = cfg.cdf.alpha_deg;
    let mut jobs = Vec::new();
    for &frequency_hz in &cfg.frequencies_hz {
        for &density in &cfg.cdf.densities_per_m3 {
            for realization in 0..cfg.n_realizations {
                jobs.push((frequency_hz, density, realization));
            }
        }
    }
    let taps: Vec<Option<Vec<f64>>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(frequency_hz, density, realization)| {
                let crown = CrownParams {
                    triangle_density_per_m3: density,
                    ..cfg.crown
                };
                let cell = Cell {
                    frequency_hz,
                    alpha_deg,
                    realization,
                };
                trace_with(cfg, &crown, &options, cell).ok().map(|t| {
                    t.cir
                        .pdp()
                        .taps_above_floor_dbm(options.tx_power_dbm, cfg.cdf.noise_floor_dbm)
                })
            })
            .collect()
    });

    let mut taps = taps.into_iter();
    let mut out = Vec::new();
    for &frequency_hz in &cfg.frequencies_hz {
        let mut curves = Vec::new();
        for &density in &cfg.cdf.densities_per_m3 {
            let mut curve = CdfCurve {
                density_per_m3: density,
                values_dbm: Vec::new(),
                failed: 0,
            };
            for _ in 0..cfg.n_realizations {
                match taps.next().flatten() {
                    Some(v) => curve.values_dbm.extend(v),
                    None => curve.failed += 1,
                }
            }
            curves.push(curve);
        }
        out.push(CdfResult {
            frequency_hz,
            alpha_deg,
            curves,
        });
    }
    Ok(out)
}

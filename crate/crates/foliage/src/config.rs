//! Experiment configuration, stored as a single JSON file.
//!
//! Every key is optional; missing keys take the defaults below, which
//! reproduce the 600 m³ crown measured along a 15 m half-circle at 60 and
//! 80 GHz with 2 GHz bandwidth.

use std::fs;
use std::path::{Path, PathBuf};

use foliage_core::{CrownParams, Material, ScatterModel, SceneOptions};
use serde::{Deserialize, Serialize};

use crate::error::{FoliageError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub crown: CrownParams,
    pub frequencies_hz: Vec<f64>,
    pub alpha_grid_deg: Vec<f64>,
    pub n_realizations: usize,
    pub material: Material,
    pub scatter: ScatterModel,
    pub bandwidth_hz: f64,
    pub output_dir: PathBuf,
    pub layout: LayoutConfig,
    pub grid: GridConfig,
    pub heatmap: HeatmapConfig,
    pub cdf: CdfConfig,
    pub calibration: CalibrationConfig,
    /// Worker threads; `None` uses one per core.
    pub threads: Option<usize>,
}

/// Antenna placement and link budget of the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutConfig {
    pub radius_m: f64,
    pub tx_lateral_offset_m: f64,
    pub suppress_los: bool,
    pub tx_power_dbm: f64,
    /// Per-end antenna gain used for path loss (dBi).
    pub antenna_gain_dbi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub len: usize,
    /// Taps kept before the direct TX→RX delay.
    pub lead_taps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeatmapConfig {
    pub pl_bin_db: f64,
    pub ds_bin_ns: f64,
}

/// RSSI distribution experiment: PDP tap powers at one receiver angle for
/// several crown densities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CdfConfig {
    pub alpha_deg: f64,
    pub densities_per_m3: Vec<f64>,
    pub noise_floor_dbm: f64,
    /// Per-end antenna gain for received power (dBi).
    pub antenna_gain_dbi: f64,
}

/// Where the calibration gain is anchored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationConfig {
    pub target_pl_db: f64,
    pub alpha_deg: f64,
    pub frequency_hz: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            crown: CrownParams::default(),
            frequencies_hz: vec![60e9, 80e9],
            alpha_grid_deg: (0..=12).map(|i| 15.0 * i as f64).collect(),
            n_realizations: 20,
            material: Material::default(),
            scatter: ScatterModel::default(),
            bandwidth_hz: 2e9,
            output_dir: PathBuf::from("out"),
            layout: LayoutConfig::default(),
            grid: GridConfig::default(),
            heatmap: HeatmapConfig::default(),
            cdf: CdfConfig::default(),
            calibration: CalibrationConfig::default(),
            threads: None,
        }
    }
}

impl Default for LayoutConfig {
    fn default() -> Self {
        let o = SceneOptions::default();
        LayoutConfig {
            radius_m: o.radius_m,
            tx_lateral_offset_m: o.tx_lateral_offset_m,
            suppress_los: o.suppress_los,
            tx_power_dbm: o.tx_power_dbm,
            antenna_gain_dbi: o.antenna_gain_dbi,
        }
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            len: foliage_core::metrics::DEFAULT_GRID_LEN,
            lead_taps: foliage_core::metrics::DEFAULT_LEAD_TAPS,
        }
    }
}

impl Default for HeatmapConfig {
    fn default() -> Self {
        HeatmapConfig {
            pl_bin_db: 1.0,
            ds_bin_ns: 0.5,
        }
    }
}

impl Default for CdfConfig {
    fn default() -> Self {
        CdfConfig {
            alpha_deg: 105.0,
            densities_per_m3: vec![0.05, 0.25],
            noise_floor_dbm: foliage_core::metrics::DEFAULT_NOISE_FLOOR_DBM,
            antenna_gain_dbi: 24.8,
        }
    }
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            target_pl_db: -140.0,
            alpha_deg: 0.0,
            frequency_hz: 60e9,
        }
    }
}

fn invalid(msg: impl Into<String>) -> FoliageError {
    FoliageError::Config(msg.into())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=180.0).contains(&alpha) {
        Ok(())
    } else {
        Err(invalid(format!("alpha {alpha} lies outside [0, 180] degrees")))
    }
}

fn check_positive(value: f64, what: &str) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{what} must be positive and finite, got {value}")))
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(FoliageError::file(path))?;
        Self::from_json(&text).map_err(|e| match e {
            FoliageError::Json(e) => invalid(format!("{}: {e}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(FoliageError::file(path))
    }

    pub fn validate(&self) -> Result<()> {
        self.crown.validate()?;
        self.material.validate()?;
        if self.n_realizations < 1 {
            return Err(invalid("n_realizations must be >= 1"));
        }
        if self.frequencies_hz.is_empty() {
            return Err(invalid("at least one frequency is required"));
        }
        for &f in &self.frequencies_hz {
            check_positive(f, "frequency")?;
        }
        if self.alpha_grid_deg.is_empty() {
            return Err(invalid("alpha grid is empty"));
        }
        for &a in &self.alpha_grid_deg {
            check_alpha(a)?;
        }
        check_positive(self.bandwidth_hz, "bandwidth")?;
        check_positive(self.layout.radius_m, "radius")?;
        if !self.scatter.occlusion_loss_db.is_finite() || !self.scatter.calibration_gain_db.is_finite() {
            return Err(invalid("scatter gains must be finite"));
        }
        if self.grid.len < 2 || self.grid.lead_taps >= self.grid.len {
            return Err(invalid("grid needs len >= 2 and lead_taps < len"));
        }
        check_positive(self.heatmap.pl_bin_db, "PL bin width")?;
        check_positive(self.heatmap.ds_bin_ns, "DS bin width")?;
        check_alpha(self.cdf.alpha_deg)?;
        for &rho in &self.cdf.densities_per_m3 {
            if !(rho >= 0.0 && rho.is_finite()) {
                return Err(invalid(format!("density {rho} must be >= 0")));
            }
        }
        check_alpha(self.calibration.alpha_deg)?;
        check_positive(self.calibration.frequency_hz, "calibration frequency")?;
        if self.threads == Some(0) {
            return Err(invalid("threads must be >= 1"));
        }
        Ok(())
    }

    /// Scene options for path-loss runs.
    pub fn scene_options(&self) -> SceneOptions {
        SceneOptions {
            bandwidth_hz: self.bandwidth_hz,
            material: self.material,
            scatter: self.scatter,
            suppress_los: self.layout.suppress_los,
            tx_power_dbm: self.layout.tx_power_dbm,
            antenna_gain_dbi: self.layout.antenna_gain_dbi,
            radius_m: self.layout.radius_m,
            tx_lateral_offset_m: self.layout.tx_lateral_offset_m,
        }
    }

    /// Scene options for received-power (RSSI) runs.
    pub fn rssi_scene_options(&self) -> SceneOptions {
        SceneOptions {
            antenna_gain_dbi: self.cdf.antenna_gain_dbi,
            ..self.scene_options()
        }
    }

    pub fn with_output_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.output_dir = dir.into();
        self
    }
}

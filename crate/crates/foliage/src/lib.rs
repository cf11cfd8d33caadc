//! File formats, experiment runner and command line for the foliage
//! channel simulator in `foliage-core`.
//!
//! - [`obj`]: Wavefront OBJ export/import of crowns and meshes.
//! - [`csvio`]: CSV tables for paths, impulse responses and PDPs.
//! - [`config`]: the JSON experiment configuration.
//! - [`runner`]: seeded parallel sweeps, calibration and the RSSI CDF run.
//! - [`output`]: result tables, heatmaps, OBJs and the plot script.

pub mod config;
pub mod csvio;
mod error;
pub mod obj;
pub mod output;
pub mod runner;

pub use config::ExperimentConfig;
pub use error::{FoliageError, Result};
pub use output::{emit_outputs, prepare_output_dir};
pub use runner::{calibrate, calibrate_at, run_cdf, run_sweep, CellRecord, Heatmap, SweepResult};

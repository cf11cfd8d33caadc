//! Writes sweep results as CSV tables, crown OBJs and a plot script.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::csvio::write_rows;
use crate::error::{FoliageError, Result};
use crate::obj::write_model;
use crate::runner::{realization_foliage, CdfResult, Heatmap, Metric, SweepResult};

pub const RECORDS_FILE: &str = "records.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const HEATMAP_PL_FILE: &str = "heatmap_pl.csv";
pub const HEATMAP_DS_FILE: &str = "heatmap_ds.csv";
pub const PLOT_SCRIPT_FILE: &str = "plot.py";

/// Creates `dir` if needed and checks that files can be created in it.
/// Run this before any computation so a bad path fails fast.
pub fn prepare_output_dir(dir: &Path) -> Result<()> {
    let fail = |source| FoliageError::OutputDir {
        path: dir.to_path_buf(),
        source,
    };
    fs::create_dir_all(dir).map_err(fail)?;
    let probe = dir.join(".foliage-write-probe");
    File::create(&probe).map_err(fail)?;
    fs::remove_file(&probe).map_err(fail)?;
    Ok(())
}

/// Short label for a frequency, `60GHz` for 60e9.
pub fn frequency_label(frequency_hz: f64) -> String {
    format!("{}GHz", frequency_hz / 1e9)
}

pub fn cdf_file_name(frequency_hz: f64) -> String {
    format!("cdf_{}.csv", frequency_label(frequency_hz))
}

pub fn foliage_file_name(alpha_deg: f64) -> String {
    format!("foliage_alpha_{alpha_deg}.obj")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(FoliageError::file(path))?))
}

fn write_csv_file<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = create(path)?;
    write_rows(&mut w, rows)?;
    w.flush().map_err(FoliageError::file(path))
}

#[derive(Serialize)]
struct HeatmapRow {
    frequency_hz: f64,
    alpha_deg: f64,
    /// Empty for the undefined bucket.
    bin_lo: Option<f64>,
    bin_hi: Option<f64>,
    count: u32,
}

fn heatmap_rows(maps: &[Heatmap]) -> Vec<HeatmapRow> {
    let mut rows = Vec::new();
    for h in maps {
        for (a, &alpha_deg) in h.alphas_deg.iter().enumerate() {
            for i in 0..h.bin_count() {
                let (lo, hi) = h.bin_edges(i);
                rows.push(HeatmapRow {
                    frequency_hz: h.frequency_hz,
                    alpha_deg,
                    bin_lo: Some(lo),
                    bin_hi: Some(hi),
                    count: h.counts[a][i],
                });
            }
            rows.push(HeatmapRow {
                frequency_hz: h.frequency_hz,
                alpha_deg,
                bin_lo: None,
                bin_hi: None,
                count: h.undefined[a],
            });
        }
    }
    rows
}

#[derive(Serialize)]
struct SummaryRow {
    frequency_hz: f64,
    alpha_deg: f64,
    n_valid: usize,
    pl_mean_db: f64,
    pl_std_db: f64,
    ds_mean_ns: f64,
    ds_std_ns: f64,
}

fn summary_rows(result: &SweepResult, cfg: &ExperimentConfig) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for &f in &cfg.frequencies_hz {
        for &a in &cfg.alpha_grid_deg {
            let pl = result.summary(Metric::PathLoss, f, a);
            let ds = result.summary(Metric::DelaySpread, f, a);
            rows.push(SummaryRow {
                frequency_hz: f,
                alpha_deg: a,
                n_valid: pl.map_or(0, |s| s.count),
                pl_mean_db: pl.map_or(f64::NAN, |s| s.mean),
                pl_std_db: pl.map_or(f64::NAN, |s| s.std_dev),
                ds_mean_ns: ds.map_or(f64::NAN, |s| s.mean),
                ds_std_ns: ds.map_or(f64::NAN, |s| s.std_dev),
            });
        }
    }
    rows
}

#[derive(Serialize)]
struct CdfRow {
    density_per_m3: f64,
    value_dbm: f64,
    probability: f64,
}

/// Writes `cdf_<f>.csv` per frequency: one empirical CDF per density.
pub fn emit_cdfs(results: &[CdfResult], dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for res in results {
        let mut rows = Vec::new();
        for curve in &res.curves {
            if let Some(cdf) = curve.cdf() {
                rows.extend(cdf.points().iter().map(|&(value_dbm, probability)| CdfRow {
                    density_per_m3: curve.density_per_m3,
                    value_dbm,
                    probability,
                }));
            }
        }
        let path = dir.join(cdf_file_name(res.frequency_hz));
        write_csv_file(&path, rows)?;
        written.push(path);
    }
    Ok(written)
}

/// Writes every output of a sweep into `cfg.output_dir` and returns the
/// paths written. `cdf` adds the RSSI CDF tables when present.
pub fn emit_outputs(
    result: &SweepResult,
    cdf: Option<&[CdfResult]>,
    cfg: &ExperimentConfig,
) -> Result<Vec<PathBuf>> {
    let dir = cfg.output_dir.as_path();
    prepare_output_dir(dir)?;
    let mut written = Vec::new();

    let path = dir.join(RECORDS_FILE);
    write_csv_file(&path, &result.records)?;
    written.push(path);

    let path = dir.join(SUMMARY_FILE);
    write_csv_file(&path, summary_rows(result, cfg))?;
    written.push(path);

    let path = dir.join(HEATMAP_PL_FILE);
    write_csv_file(&path, heatmap_rows(&result.pl_heatmaps))?;
    written.push(path);

    let path = dir.join(HEATMAP_DS_FILE);
    write_csv_file(&path, heatmap_rows(&result.ds_heatmaps))?;
    written.push(path);

    if let Some(cdf) = cdf {
        written.extend(emit_cdfs(cdf, dir)?);
    }

    // crowns do not depend on frequency, so one OBJ per angle
    for &alpha in &cfg.alpha_grid_deg {
        let Ok(model) = realization_foliage(&cfg.crown, 0, alpha) else {
            continue;
        };
        let path = dir.join(foliage_file_name(alpha));
        let mut w = create(&path)?;
        write_model(&mut w, &model).map_err(FoliageError::file(&path))?;
        w.flush().map_err(FoliageError::file(&path))?;
        written.push(path);
    }

    let path = dir.join(PLOT_SCRIPT_FILE);
    fs::write(&path, PLOT_SCRIPT).map_err(FoliageError::file(&path))?;
    written.push(path);
    Ok(written)
}

/// Standalone matplotlib script reading the CSVs next to it.
pub const PLOT_SCRIPT: &str = r#"#!/usr/bin/env python3
"""Plots sweep outputs: PL/DS occurrence heatmaps over alpha and RSSI CDFs.

Usage: python3 plot.py [output_dir]   (defaults to this script's directory)
"""
import csv
import glob
import math
import os
import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

root = sys.argv[1] if len(sys.argv) > 1 else os.path.dirname(os.path.abspath(__file__))


def rows(name):
    with open(os.path.join(root, name), newline="") as fh:
        return list(csv.DictReader(fh))


def heatmap(name, label, stem):
    data = rows(name)
    by_freq = defaultdict(list)
    for r in data:
        if r["bin_lo"]:
            by_freq[float(r["frequency_hz"])].append(r)
    summary = rows("summary.csv")
    col = "pl_mean_db" if stem == "pl" else "ds_mean_ns"
    for f, rs in sorted(by_freq.items()):
        alphas = sorted({float(r["alpha_deg"]) for r in rs})
        los = sorted({float(r["bin_lo"]) for r in rs})
        if not alphas or not los:
            continue
        width = float(rs[0]["bin_hi"]) - float(rs[0]["bin_lo"])
        grid = np.zeros((len(los), len(alphas)))
        for r in rs:
            grid[los.index(float(r["bin_lo"])), alphas.index(float(r["alpha_deg"]))] = int(r["count"])
        step = alphas[1] - alphas[0] if len(alphas) > 1 else 1.0
        fig, ax = plt.subplots(figsize=(6, 4))
        mesh = ax.pcolormesh(
            np.append(np.array(alphas) - step / 2, alphas[-1] + step / 2),
            np.append(los, los[-1] + width),
            grid,
            cmap="viridis",
            shading="flat",
        )
        means = [
            (float(s["alpha_deg"]), float(s[col]))
            for s in summary
            if float(s["frequency_hz"]) == f and not math.isnan(float(s[col]))
        ]
        if means:
            ax.plot(*zip(*means), "w-o", ms=3, lw=1, label="mean")
            ax.legend(loc="best")
        fig.colorbar(mesh, ax=ax, label="occurrences")
        ax.set_xlabel("alpha [deg]")
        ax.set_ylabel(label)
        ax.set_title(f"{f / 1e9:g} GHz")
        fig.tight_layout()
        fig.savefig(os.path.join(root, f"heatmap_{stem}_{f / 1e9:g}GHz.png"), dpi=150)
        plt.close(fig)


def cdfs():
    for path in sorted(glob.glob(os.path.join(root, "cdf_*.csv"))):
        curves = defaultdict(list)
        with open(path, newline="") as fh:
            for r in csv.DictReader(fh):
                curves[float(r["density_per_m3"])].append((float(r["value_dbm"]), float(r["probability"])))
        if not curves:
            continue
        fig, ax = plt.subplots(figsize=(5, 4))
        for rho, pts in sorted(curves.items()):
            x, y = zip(*pts)
            ax.step(x, y, where="post", label=f"rho = {rho:g}")
        ax.axhline(0.5, color="grey", lw=0.5)
        ax.set_xlabel("RSSI [dBm]")
        ax.set_ylabel("CDF")
        ax.set_title(os.path.basename(path)[4:-4])
        ax.legend(loc="best")
        fig.tight_layout()
        fig.savefig(path[:-4] + ".png", dpi=150)
        plt.close(fig)


if os.path.exists(os.path.join(root, "heatmap_pl.csv")):
    heatmap("heatmap_pl.csv", "PL [dB]", "pl")
    heatmap("heatmap_ds.csv", "DS [ns]", "ds")
cdfs()
"#;

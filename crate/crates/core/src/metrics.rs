//! Band-limited CIR assembly and channel metrics: path loss, power delay
//! profile, RMS delay spread and empirical CDFs.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::channel::{linear_to_db, PathContribution};
use crate::error::{Error, Result};

/// Taps on each side of a path that receive its sinc deposit.
pub const SINC_HALF_WIDTH: usize = 64;
pub const DEFAULT_GRID_LEN: usize = 1024;
/// Taps kept ahead of the earliest path.
pub const DEFAULT_LEAD_TAPS: usize = 32;
/// Default floor for CDF tap selection (dBm).
pub const DEFAULT_NOISE_FLOOR_DBM: f64 = -130.0;

/// Normalized sinc, `sin(πx)/(πx)`.
#[inline]
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = PI * x;
        libm::sin(px) / px
    }
}

/// Uniform delay grid `τ_k = origin + k·step`, `k < len`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DelayGrid {
    pub origin_s: f64,
    pub step_s: f64,
    pub len: usize,
}

impl DelayGrid {
    pub fn new(origin_s: f64, step_s: f64, len: usize) -> Result<Self> {
        if !(step_s > 0.0 && step_s.is_finite()) || !origin_s.is_finite() {
            return Err(Error::InvalidArgument("grid step must be positive and finite"));
        }
        if len == 0 {
            return Err(Error::InvalidArgument("grid must have at least one tap"));
        }
        Ok(DelayGrid {
            origin_s,
            step_s,
            len,
        })
    }

    /// Grid with step `1/bw` whose origin sits `lead` taps before `first_delay_s`.
    pub fn anchored(first_delay_s: f64, bandwidth_hz: f64, len: usize, lead: usize) -> Result<Self> {
        if !(bandwidth_hz > 0.0 && bandwidth_hz.is_finite()) {
            return Err(Error::InvalidArgument("bandwidth must be positive"));
        }
        let step = 1.0 / bandwidth_hz;
        DelayGrid::new(first_delay_s - lead as f64 * step, step, len)
    }

    #[inline]
    pub fn delay(&self, k: usize) -> f64 {
        self.origin_s + k as f64 * self.step_s
    }

    pub fn end_s(&self) -> f64 {
        self.delay(self.len - 1)
    }

    pub fn delays(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(move |k| self.delay(k))
    }
}

/// Tapped delay line for a band-limited channel.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Cir {
    pub taps: Vec<Complex64>,
    pub grid: DelayGrid,
    pub carrier_hz: f64,
}

impl Cir {
    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|h| h.norm_sqr()).sum()
    }

    /// Instantaneous PDP `|h(τ)|²` of this single realization.
    pub fn pdp(&self) -> Pdp {
        Pdp {
            power: self.taps.iter().map(|h| h.norm_sqr()).collect(),
            grid: self.grid,
        }
    }
}

/// Power delay profile (linear power per tap).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Pdp {
    pub power: Vec<f64>,
    pub grid: DelayGrid,
}

impl Pdp {
    pub fn total_power(&self) -> f64 {
        self.power.iter().sum()
    }

    /// Tap powers in dBm (for TX power `tx_power_dbm`) that lie at or above `floor_dbm`.
    pub fn taps_above_floor_dbm(&self, tx_power_dbm: f64, floor_dbm: f64) -> Vec<f64> {
        self.power
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| tx_power_dbm + linear_to_db(p))
            .filter(|&dbm| dbm >= floor_dbm)
            .collect()
    }
}

/// Path loss, delay spread and mean delay of one channel.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChannelStats {
    /// Total CIR energy in dB (negative; equals RSSI in dBm at 0 dBm TX power).
    pub pl_db: f64,
    pub ds_s: f64,
    pub mean_delay_s: f64,
}

/// Sinc-interpolates every path onto `grid`; each path deposits
/// `a·sinc((τ_k − τ)/Δτ)` on the taps within [`SINC_HALF_WIDTH`] of its delay.
pub fn assemble_cir_on(paths: &[PathContribution], grid: DelayGrid, carrier_hz: f64) -> Result<Cir> {
    let mut taps = alloc::vec![Complex64::new(0.0, 0.0); grid.len];
    let end = grid.end_s();
    for p in paths {
        if !(p.delay_s >= grid.origin_s && p.delay_s <= end) {
            return Err(Error::DelayOutsideGrid {
                delay_s: p.delay_s,
                start_s: grid.origin_s,
                end_s: end,
            });
        }
        let x = (p.delay_s - grid.origin_s) / grid.step_s;
        let center = libm::round(x) as i64;
        let lo = (center - SINC_HALF_WIDTH as i64).max(0) as usize;
        let hi = ((center + SINC_HALF_WIDTH as i64) as usize).min(grid.len - 1);
        for (k, tap) in taps.iter_mut().enumerate().take(hi + 1).skip(lo) {
            *tap += p.amplitude * sinc(k as f64 - x);
        }
    }
    Ok(Cir {
        taps,
        grid,
        carrier_hz,
    })
}

/// Assembles a CIR on a `1/bw` grid of `grid_len` taps that starts
/// [`DEFAULT_LEAD_TAPS`] before the earliest path (at zero delay when there are no paths).
pub fn assemble_cir(
    paths: &[PathContribution],
    bandwidth_hz: f64,
    grid_len: usize,
    carrier_hz: f64,
) -> Result<Cir> {
    let first = paths
        .iter()
        .map(|p| p.delay_s)
        .fold(f64::INFINITY, f64::min);
    let grid = if first.is_finite() {
        DelayGrid::anchored(first, bandwidth_hz, grid_len, DEFAULT_LEAD_TAPS)?
    } else {
        DelayGrid::anchored(0.0, bandwidth_hz, grid_len, 0)?
    };
    assemble_cir_on(paths, grid, carrier_hz)
}

/// `10·log10 Σ|h|²`; `-inf` for an all-zero response.
pub fn path_loss_db(cir: &Cir) -> f64 {
    let e = cir.energy();
    if e > 0.0 {
        linear_to_db(e)
    } else {
        f64::NEG_INFINITY
    }
}

/// Mean delay and RMS delay spread of a PDP, `(τ̄, DS)` in seconds.
pub fn delay_moments(pdp: &Pdp) -> Result<(f64, f64)> {
    let total = pdp.total_power();
    if !(total > 0.0) {
        return Err(Error::ZeroPower);
    }
    // moments relative to the grid origin keep the sums well conditioned
    let rel = |k: usize| k as f64 * pdp.grid.step_s;
    let mean_rel = pdp
        .power
        .iter()
        .enumerate()
        .map(|(k, &p)| rel(k) * p)
        .sum::<f64>()
        / total;
    let var = pdp
        .power
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let d = rel(k) - mean_rel;
            d * d * p
        })
        .sum::<f64>()
        / total;
    Ok((pdp.grid.origin_s + mean_rel, libm::sqrt(var.max(0.0))))
}

/// RMS delay spread `sqrt(Σ(τ − τ̄)² P / Σ P)`.
pub fn rms_delay_spread(pdp: &Pdp) -> Result<f64> {
    delay_moments(pdp).map(|(_, ds)| ds)
}

pub fn channel_stats(cir: &Cir) -> Result<ChannelStats> {
    let (mean_delay_s, ds_s) = delay_moments(&cir.pdp())?;
    Ok(ChannelStats {
        pl_db: path_loss_db(cir),
        ds_s,
        mean_delay_s,
    })
}

/// Empirical expectation of `|h|²` across realizations sharing one grid.
pub fn pdp_from_realizations(cirs: &[Cir]) -> Result<Pdp> {
    let first = cirs
        .first()
        .ok_or(Error::InvalidArgument("need at least one CIR"))?;
    if cirs.iter().any(|c| c.grid != first.grid) {
        return Err(Error::GridMismatch);
    }
    // running mean: identical realizations reproduce |h|² bit for bit
    let mut power = alloc::vec![0.0; first.grid.len];
    for (i, c) in cirs.iter().enumerate() {
        let n = (i + 1) as f64;
        for (acc, h) in power.iter_mut().zip(&c.taps) {
            *acc += (h.norm_sqr() - *acc) / n;
        }
    }
    Ok(Pdp {
        power,
        grid: first.grid,
    })
}

/// Right-continuous empirical CDF as `(value, P[X ≤ value])` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    points: Vec<(f64, f64)>,
    count: usize,
}

impl EmpiricalCdf {
    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn sample_count(&self) -> usize {
        self.count
    }

    /// Smallest value `v` with `F(v) ≥ p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        self.points
            .iter()
            .find(|&&(_, f)| f >= p - 1e-12)
            .map(|&(v, _)| v)
            .unwrap_or(self.points[self.points.len() - 1].0)
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    /// `F(x) = P[X ≤ x]`.
    pub fn eval(&self, x: f64) -> f64 {
        match self
            .points
            .binary_search_by(|&(v, _)| v.partial_cmp(&x).unwrap_or(Ordering::Less))
        {
            Ok(i) => self.points[i].1,
            Err(0) => 0.0,
            Err(i) => self.points[i - 1].1,
        }
    }
}

/// Builds the empirical CDF; NaN values are rejected.
pub fn empirical_cdf(values: &[f64]) -> Result<EmpiricalCdf> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("empirical CDF needs at least one value"));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument("empirical CDF input contains NaN"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let n = sorted.len() as f64;
    let mut points: Vec<(f64, f64)> = Vec::new();
    for (i, v) in sorted.iter().enumerate() {
        let f = (i + 1) as f64 / n;
        match points.last_mut() {
            Some(last) if last.0 == *v => last.1 = f,
            _ => points.push((*v, f)),
        }
    }
    Ok(EmpiricalCdf {
        points,
        count: sorted.len(),
    })
}

//! CSV import/export of paths, impulse responses and power delay profiles.
//!
//! Floats are written in shortest round-trip form, so a reload reproduces
//! the written values bit for bit.

use std::io::{Read, Write};

use foliage_core::{Cir, Complex64, DelayGrid, PathContribution, Pdp};
use serde::{Deserialize, Serialize};

use crate::error::{FoliageError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathRow {
    /// Empty for the line-of-sight path.
    pub face_index: Option<usize>,
    pub tau_s: f64,
    pub amp_real: f64,
    pub amp_imag: f64,
    pub occlusions_in: u32,
    pub occlusions_out: u32,
}

impl From<&PathContribution> for PathRow {
    fn from(p: &PathContribution) -> Self {
        PathRow {
            face_index: p.face_index,
            tau_s: p.delay_s,
            amp_real: p.amplitude.re,
            amp_imag: p.amplitude.im,
            occlusions_in: p.occlusions_in,
            occlusions_out: p.occlusions_out,
        }
    }
}

impl From<PathRow> for PathContribution {
    fn from(r: PathRow) -> Self {
        PathContribution {
            delay_s: r.tau_s,
            amplitude: Complex64::new(r.amp_real, r.amp_imag),
            face_index: r.face_index,
            occlusions_in: r.occlusions_in,
            occlusions_out: r.occlusions_out,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CirRow {
    pub tau_s: f64,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdpRow {
    pub tau_s: f64,
    pub power: f64,
}

/// Serializes `rows` with a header line.
pub fn write_rows<W: Write, T: Serialize>(out: W, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<R: Read, T: for<'de> Deserialize<'de>>(input: R) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(input);
    let rows = r.deserialize().collect::<std::result::Result<Vec<T>, _>>()?;
    Ok(rows)
}

pub fn write_paths<W: Write>(out: W, paths: &[PathContribution]) -> Result<()> {
    write_rows(out, paths.iter().map(PathRow::from))
}

pub fn read_paths<R: Read>(input: R) -> Result<Vec<PathContribution>> {
    Ok(read_rows::<_, PathRow>(input)?
        .into_iter()
        .map(PathContribution::from)
        .collect())
}

pub fn write_cir<W: Write>(out: W, cir: &Cir) -> Result<()> {
    write_rows(
        out,
        cir.grid.delays().zip(&cir.taps).map(|(tau_s, h)| CirRow {
            tau_s,
            re: h.re,
            im: h.im,
        }),
    )
}

/// Reads a CIR written by [`write_cir`]. The grid is recovered from the
/// first two delays, so at least two rows are required.
pub fn read_cir<R: Read>(input: R, carrier_hz: f64) -> Result<Cir> {
    let rows: Vec<CirRow> = read_rows(input)?;
    let grid = grid_from_delays(rows.iter().map(|r| r.tau_s))?;
    Ok(Cir {
        taps: rows.iter().map(|r| Complex64::new(r.re, r.im)).collect(),
        grid,
        carrier_hz,
    })
}

pub fn write_pdp<W: Write>(out: W, pdp: &Pdp) -> Result<()> {
    write_rows(
        out,
        pdp.grid
            .delays()
            .zip(&pdp.power)
            .map(|(tau_s, &power)| PdpRow { tau_s, power }),
    )
}

pub fn read_pdp<R: Read>(input: R) -> Result<Pdp> {
    let rows: Vec<PdpRow> = read_rows(input)?;
    let grid = grid_from_delays(rows.iter().map(|r| r.tau_s))?;
    Ok(Pdp {
        power: rows.iter().map(|r| r.power).collect(),
        grid,
    })
}

fn grid_from_delays(mut delays: impl ExactSizeIterator<Item = f64>) -> Result<DelayGrid> {
    let len = delays.len();
    let (Some(t0), Some(t1)) = (delays.next(), delays.next()) else {
        return Err(FoliageError::Config("a delay grid needs at least two rows".into()));
    };
    Ok(DelayGrid::new(t0, t1 - t0, len)?)
}

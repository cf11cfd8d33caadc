//! Per-cell seed derivation for reproducible sweeps.

/// One step of the SplitMix64 output function.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of realization `realization` at receiver angle `alpha_deg`.
///
/// The angle enters at millidegree resolution, so a cell's seed depends only
/// on its own coordinates and never on the rest of the grid.
pub fn cell_seed(base: u64, realization: u64, alpha_deg: f64) -> u64 {
    let alpha_key = libm::round(alpha_deg * 1000.0) as i64 as u64;
    base ^ splitmix64(splitmix64(realization) ^ alpha_key.rotate_left(32))
}
